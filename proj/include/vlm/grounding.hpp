#pragma once

#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace vlm {

struct GroundingError : std::runtime_error {
    enum class Kind { Grammar, Range, Ordering };
    Kind kind;
    GroundingError(Kind k, const std::string &msg) : std::runtime_error(msg), kind(k) {}
};

// Corners normalized to [0, 999]; (x1, y1) top-left, (x2, y2) bottom-right.
struct BoundingBox {
    int x1 = 0, y1 = 0, x2 = 0, y2 = 0;
    bool operator==(const BoundingBox &) const = default;
};

// Empty box list marks a negative sample.
struct GroundedSpan {
    std::string ref_text;
    std::vector<BoundingBox> boxes;
    bool operator==(const GroundedSpan &) const = default;
};

struct GroundedMessage {
    bool grounding_prefix = false;
    std::vector<std::variant<std::string, GroundedSpan>> segments;
    bool operator==(const GroundedMessage &) const = default;
};

enum class PromptKind { Locate, GroundedConversation, InContext };

// clamp(round(p / D * 999), 0, 999), half away from zero; D is the
// original image width for x and height for y.
BoundingBox normalize_box(double px1, double py1, double px2, double py2,
                          int img_w, int img_h);

// p = n / 999 * D
struct PixelBox {
    double x1, y1, x2, y2;
};
PixelBox denormalize_box(const BoundingBox &b, int img_w, int img_h);

GroundedMessage parse_grounded(const std::string &text);
std::string serialize_grounded(const GroundedMessage &msg);

std::string build_prompt(PromptKind kind, const std::string &query = "");

} // namespace vlm
