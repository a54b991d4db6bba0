#include "vlm/grounding.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace vlm {

namespace {

using Kind = GroundingError::Kind;

constexpr const char *kGrounding = "<|grounding|>";
constexpr const char *kRefOpen = "<|ref|>";
constexpr const char *kRefClose = "<|/ref|>";
constexpr const char *kDetOpen = "<|det|>";
constexpr const char *kDetClose = "<|/det|>";

bool starts_with(const std::string &s, std::size_t pos, const char *prefix) {
    return s.compare(pos, std::char_traits<char>::length(prefix), prefix) == 0;
}

void skip_ws(const std::string &s, std::size_t &pos) {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos])))
        ++pos;
}

int parse_coord(const std::string &s, std::size_t &pos) {
    skip_ws(s, pos);
    if (pos >= s.size() || !std::isdigit(static_cast<unsigned char>(s[pos])))
        throw GroundingError(Kind::Grammar, "expected coordinate digit");
    long v = 0;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
        v = v * 10 + (s[pos] - '0');
        if (v > 9999)
            throw GroundingError(Kind::Range, "coordinate out of range");
        ++pos;
    }
    if (v > 999)
        throw GroundingError(Kind::Range, "coordinate out of range");
    return static_cast<int>(v);
}

void expect(const std::string &s, std::size_t &pos, char c) {
    skip_ws(s, pos);
    if (pos >= s.size() || s[pos] != c)
        throw GroundingError(Kind::Grammar, std::string("expected '") + c + "'");
    ++pos;
}

std::vector<BoundingBox> parse_boxlist(const std::string &s, std::size_t &pos) {
    expect(s, pos, '[');
    std::vector<BoundingBox> boxes;
    skip_ws(s, pos);
    if (pos < s.size() && s[pos] == ']') {
        ++pos;
        return boxes;
    }
    while (true) {
        expect(s, pos, '[');
        BoundingBox b;
        b.x1 = parse_coord(s, pos);
        expect(s, pos, ',');
        b.y1 = parse_coord(s, pos);
        expect(s, pos, ',');
        b.x2 = parse_coord(s, pos);
        expect(s, pos, ',');
        b.y2 = parse_coord(s, pos);
        expect(s, pos, ']');
        if (b.x2 < b.x1 || b.y2 < b.y1)
            throw GroundingError(Kind::Ordering, "box corners out of order");
        boxes.push_back(b);
        skip_ws(s, pos);
        if (pos < s.size() && s[pos] == ',') {
            ++pos;
            continue;
        }
        break;
    }
    expect(s, pos, ']');
    return boxes;
}

} // namespace

BoundingBox normalize_box(double px1, double py1, double px2, double py2, int img_w,
                          int img_h) {
    if (img_w < 1 || img_h < 1)
        throw std::invalid_argument("normalize_box: image dimensions must be >= 1");
    auto norm = [](double p, int d) {
        long n = std::llround(p / d * 999.0);
        return static_cast<int>(std::clamp(n, 0L, 999L));
    };
    BoundingBox b{norm(px1, img_w), norm(py1, img_h), norm(px2, img_w), norm(py2, img_h)};
    if (b.x2 < b.x1 || b.y2 < b.y1)
        throw GroundingError(GroundingError::Kind::Ordering,
                             "normalized box corners out of order");
    return b;
}

PixelBox denormalize_box(const BoundingBox &b, int img_w, int img_h) {
    auto denorm = [](int n, int d) { return n / 999.0 * d; };
    return {denorm(b.x1, img_w), denorm(b.y1, img_h), denorm(b.x2, img_w),
            denorm(b.y2, img_h)};
}

GroundedMessage parse_grounded(const std::string &text) {
    GroundedMessage msg;
    std::size_t pos = 0;
    if (starts_with(text, 0, kGrounding)) {
        msg.grounding_prefix = true;
        pos = std::char_traits<char>::length(kGrounding);
    }
    std::string plain;
    auto flush = [&] {
        if (!plain.empty()) {
            msg.segments.emplace_back(plain);
            plain.clear();
        }
    };
    while (pos < text.size()) {
        if (text[pos] != '<' || !starts_with(text, pos, "<|")) {
            plain.push_back(text[pos]);
            ++pos;
            continue;
        }
        if (starts_with(text, pos, kRefOpen)) {
            flush();
            pos += std::char_traits<char>::length(kRefOpen);
            std::size_t close = text.find("<|", pos);
            if (close == std::string::npos || !starts_with(text, close, kRefClose))
                throw GroundingError(Kind::Grammar, "unterminated <|ref|>");
            GroundedSpan span;
            span.ref_text = text.substr(pos, close - pos);
            if (span.ref_text.empty())
                throw GroundingError(Kind::Grammar, "empty <|ref|> text");
            pos = close + std::char_traits<char>::length(kRefClose);
            skip_ws(text, pos);
            if (!starts_with(text, pos, kDetOpen))
                throw GroundingError(Kind::Grammar, "<|ref|> without <|det|> block");
            pos += std::char_traits<char>::length(kDetOpen);
            span.boxes = parse_boxlist(text, pos);
            skip_ws(text, pos);
            if (!starts_with(text, pos, kDetClose))
                throw GroundingError(Kind::Grammar, "unterminated <|det|>");
            pos += std::char_traits<char>::length(kDetClose);
            msg.segments.emplace_back(std::move(span));
        } else if (starts_with(text, pos, kDetOpen)) {
            throw GroundingError(Kind::Grammar, "<|det|> without preceding <|ref|>");
        } else if (starts_with(text, pos, kRefClose) || starts_with(text, pos, kDetClose)) {
            throw GroundingError(Kind::Grammar, "unbalanced closing token");
        } else if (starts_with(text, pos, kGrounding)) {
            throw GroundingError(Kind::Grammar, "<|grounding|> only allowed as prefix");
        } else {
            // "<|" that is not a known special token stays literal text.
            plain.push_back(text[pos]);
            ++pos;
        }
    }
    flush();
    return msg;
}

std::string serialize_grounded(const GroundedMessage &msg) {
    std::string out;
    if (msg.grounding_prefix)
        out += kGrounding;
    for (const auto &seg : msg.segments) {
        if (const auto *text = std::get_if<std::string>(&seg)) {
            out += *text;
            continue;
        }
        const auto &span = std::get<GroundedSpan>(seg);
        out += kRefOpen;
        out += span.ref_text;
        out += kRefClose;
        out += kDetOpen;
        out += '[';
        for (std::size_t i = 0; i < span.boxes.size(); ++i) {
            const auto &b = span.boxes[i];
            if (i > 0)
                out += ", ";
            out += '[' + std::to_string(b.x1) + ", " + std::to_string(b.y1) + ", " +
                   std::to_string(b.x2) + ", " + std::to_string(b.y2) + ']';
        }
        out += ']';
        out += kDetClose;
    }
    return out;
}

std::string build_prompt(PromptKind kind, const std::string &query) {
    switch (kind) {
    case PromptKind::Locate:
        if (query.empty())
            throw std::invalid_argument("build_prompt: query required");
        return std::string("Locate ") + kRefOpen + query + kRefClose +
               " in the given image.";
    case PromptKind::GroundedConversation:
        return std::string(kGrounding) + "Can you describe the content of the image?";
    case PromptKind::InContext:
        if (query.empty())
            throw std::invalid_argument("build_prompt: query required");
        // The in-context template has no space after the first period.
        return std::string(kGrounding) + "The first image shows " + query +
               ".Please identify the object of the same category in the second image.";
    }
    throw std::invalid_argument("build_prompt: unknown kind");
}

} // namespace vlm
