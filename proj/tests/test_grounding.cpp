#include "vlm/grounding.hpp"

#include "vlm/tensor.hpp"

#include <doctest.h>

#include <cmath>

using namespace vlm;

namespace {

GroundedMessage random_message(Rng &rng) {
    GroundedMessage msg;
    msg.grounding_prefix = rng.uniform_int(0, 1) == 1;
    int n_segments = rng.uniform_int(1, 4);
    bool last_was_text = false;
    for (int i = 0; i < n_segments; ++i) {
        if (rng.uniform_int(0, 1) == 0 && !last_was_text) {
            // Text segments: avoid "<|" and avoid adjacent text segments,
            // both of which could not round-trip unambiguously.
            static const char *texts[] = {"a dog ", " two cats", "on the grass. ",
                                          "x, y and z", " 42 "};
            msg.segments.emplace_back(std::string(texts[rng.uniform_int(0, 4)]));
            last_was_text = true;
        } else {
            GroundedSpan span;
            static const char *refs[] = {"dog", "red car", "traffic light"};
            span.ref_text = refs[rng.uniform_int(0, 2)];
            int n_boxes = rng.uniform_int(0, 3);
            for (int b = 0; b < n_boxes; ++b) {
                BoundingBox box;
                box.x1 = rng.uniform_int(0, 999);
                box.x2 = rng.uniform_int(box.x1, 999);
                box.y1 = rng.uniform_int(0, 999);
                box.y2 = rng.uniform_int(box.y1, 999);
                span.boxes.push_back(box);
            }
            msg.segments.emplace_back(std::move(span));
            last_was_text = false;
        }
    }
    return msg;
}

} // namespace

TEST_CASE("normalize_box endpoints and rounding") {
    BoundingBox zero = normalize_box(0, 0, 0, 0, 640, 480);
    CHECK(zero == BoundingBox{0, 0, 0, 0});

    BoundingBox full = normalize_box(0, 0, 640, 480, 640, 480);
    CHECK(full.x2 == 999);
    CHECK(full.y2 == 999);

    // 500/1000*999 = 499.5, half away from zero -> 500.
    BoundingBox mid = normalize_box(500, 0, 500, 0, 1000, 1000);
    CHECK(mid.x1 == 500);
    CHECK(mid.x2 == 500);

    // Out-of-frame pixels clamp into range.
    BoundingBox clamped = normalize_box(-10, -10, 5000, 5000, 640, 480);
    CHECK(clamped == BoundingBox{0, 0, 999, 999});
}

TEST_CASE("normalize_box ordering error") {
    CHECK_THROWS_AS(normalize_box(300, 0, 100, 0, 640, 480), GroundingError);
    try {
        normalize_box(0, 400, 0, 100, 640, 480);
        FAIL("expected ordering error");
    } catch (const GroundingError &e) {
        CHECK(e.kind == GroundingError::Kind::Ordering);
    }
}

TEST_CASE("denormalize_box endpoints") {
    PixelBox p = denormalize_box({0, 0, 999, 999}, 640, 480);
    CHECK(p.x1 == 0.0);
    CHECK(p.y1 == 0.0);
    CHECK(p.x2 == doctest::Approx(640.0).epsilon(1e-12));
    CHECK(p.y2 == doctest::Approx(480.0).epsilon(1e-12));
}

TEST_CASE("quantization round-trip bound") {
    Rng rng(101);
    for (int trial = 0; trial < 10000; ++trial) {
        int w = rng.uniform_int(1, 4000);
        int h = rng.uniform_int(1, 4000);
        double x = rng.uniform(0.0, double(w));
        double y = rng.uniform(0.0, double(h));
        BoundingBox b = normalize_box(x, y, x, y, w, h);
        PixelBox p = denormalize_box(b, w, h);
        CHECK(std::fabs(p.x1 - x) <= double(w) / 999.0 + 1e-9);
        CHECK(std::fabs(p.y1 - y) <= double(h) / 999.0 + 1e-9);
    }
}

TEST_CASE("normalize_box is monotone in each coordinate") {
    Rng rng(102);
    for (int trial = 0; trial < 2000; ++trial) {
        int w = rng.uniform_int(1, 2000);
        double a = rng.uniform(0.0, double(w));
        double b = rng.uniform(a, double(w));
        BoundingBox box = normalize_box(a, 0, b, 0, w, 100);
        CHECK(box.x1 <= box.x2);
    }
}

TEST_CASE("parse the response template") {
    GroundedMessage msg = parse_grounded(
        "Two <|ref|>dogs<|/ref|><|det|>[[100, 200, 300, 400]]<|/det|> are running on the grass.");
    CHECK_FALSE(msg.grounding_prefix);
    REQUIRE(msg.segments.size() == 3);
    CHECK(std::get<std::string>(msg.segments[0]) == "Two ");
    const auto &span = std::get<GroundedSpan>(msg.segments[1]);
    CHECK(span.ref_text == "dogs");
    REQUIRE(span.boxes.size() == 1);
    CHECK(span.boxes[0] == BoundingBox{100, 200, 300, 400});
    CHECK(std::get<std::string>(msg.segments[2]) == " are running on the grass.");
}

TEST_CASE("parse plain text and prefix") {
    GroundedMessage plain = parse_grounded("hello world");
    CHECK_FALSE(plain.grounding_prefix);
    REQUIRE(plain.segments.size() == 1);
    CHECK(std::get<std::string>(plain.segments[0]) == "hello world");

    GroundedMessage prefixed = parse_grounded("<|grounding|>hello");
    CHECK(prefixed.grounding_prefix);
    REQUIRE(prefixed.segments.size() == 1);
}

TEST_CASE("parse accepts whitespace between ref and det") {
    GroundedMessage msg =
        parse_grounded("<|ref|>cat<|/ref|> <|det|>[[1,2,3,4]]<|/det|>");
    REQUIRE(msg.segments.size() == 1);
    CHECK(std::get<GroundedSpan>(msg.segments[0]).boxes.size() == 1);

    GroundedMessage neg = parse_grounded("<|ref|>cat<|/ref|><|det|>[]<|/det|>");
    CHECK(std::get<GroundedSpan>(neg.segments[0]).boxes.empty());
}

TEST_CASE("parse rejects grammar violations") {
    auto expect_kind = [](const std::string &text, GroundingError::Kind kind) {
        try {
            parse_grounded(text);
            FAIL(("no error raised for: " + text).c_str());
        } catch (const GroundingError &e) {
            CHECK(e.kind == kind);
        }
    };
    expect_kind("<|det|>[[1,2,3,4]]<|/det|>", GroundingError::Kind::Grammar);
    expect_kind("<|ref|>dog<|/ref|> no det here", GroundingError::Kind::Grammar);
    expect_kind("<|ref|>dog<|/ref|><|det|>[[1,2,3]]<|/det|>",
                GroundingError::Kind::Grammar);
    expect_kind("<|ref|>dog<|/ref|><|det|>[1,2,3,4]<|/det|>",
                GroundingError::Kind::Grammar);
    expect_kind("stray closer <|/ref|>", GroundingError::Kind::Grammar);
    expect_kind("middle <|grounding|> token", GroundingError::Kind::Grammar);
    expect_kind("<|ref|>dog<|/ref|><|det|>[[1,2,3,1000]]<|/det|>",
                GroundingError::Kind::Range);
    expect_kind("<|ref|>dog<|/ref|><|det|>[[300,2,100,4]]<|/det|>",
                GroundingError::Kind::Ordering);
}

TEST_CASE("serialize canonical forms") {
    GroundedSpan car{"car", {{0, 0, 999, 999}}};
    GroundedMessage m1;
    m1.segments.emplace_back(car);
    CHECK(serialize_grounded(m1) ==
          "<|ref|>car<|/ref|><|det|>[[0, 0, 999, 999]]<|/det|>");

    GroundedSpan cat{"cat", {}};
    GroundedMessage m2;
    m2.segments.emplace_back(cat);
    CHECK(serialize_grounded(m2) == "<|ref|>cat<|/ref|><|det|>[]<|/det|>");

    GroundedSpan two{"dogs", {{1, 2, 3, 4}, {5, 6, 7, 8}}};
    GroundedMessage m3;
    m3.grounding_prefix = true;
    m3.segments.emplace_back(std::string("see "));
    m3.segments.emplace_back(two);
    CHECK(serialize_grounded(m3) ==
          "<|grounding|>see <|ref|>dogs<|/ref|><|det|>[[1, 2, 3, 4], [5, 6, 7, 8]]<|/det|>");
}

TEST_CASE("parse-serialize round trip on random messages") {
    Rng rng(303);
    for (int trial = 0; trial < 10000; ++trial) {
        GroundedMessage msg = random_message(rng);
        std::string text = serialize_grounded(msg);
        GroundedMessage back = parse_grounded(text);
        CHECK(back == msg);
        CHECK(serialize_grounded(back) == text);
    }
}

TEST_CASE("build_prompt templates are byte-exact") {
    CHECK(build_prompt(PromptKind::Locate, "car") ==
          "Locate <|ref|>car<|/ref|> in the given image.");
    CHECK(build_prompt(PromptKind::GroundedConversation) ==
          "<|grounding|>Can you describe the content of the image?");
    CHECK(build_prompt(PromptKind::InContext, "an object within the red bounding box") ==
          "<|grounding|>The first image shows an object within the red bounding box."
          "Please identify the object of the same category in the second image.");
}
