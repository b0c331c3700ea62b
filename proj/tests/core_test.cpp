#include <gtest/gtest.h>

#include "tabletop/image_io.hpp"
#include "tabletop/render.hpp"
#include "tabletop/serialize.hpp"
#include "tabletop/subtask.hpp"

using namespace tabletop;

namespace {

ObjectInstance make(ObjectKind k, Color c, double x, double y, BlockSize s = BlockSize::big, double yaw = 0.0) {
  ObjectInstance o;
  o.kind = k;
  o.color = c;
  o.size = s;
  o.pose = {x, y, yaw};
  return o;
}

Bytes bytes_of(std::string_view s) { return Bytes(s.begin(), s.end()); }

}  // namespace

TEST(ImageIo, Base64KnownVectors) {
  EXPECT_EQ(base64_encode(bytes_of("foobar")), "Zm9vYmFy");
  EXPECT_EQ(base64_encode(bytes_of("fooba")), "Zm9vYmE=");
  EXPECT_EQ(base64_encode(bytes_of("foob")), "Zm9vYg==");
  EXPECT_EQ(base64_encode(Bytes{}), "");
  EXPECT_EQ(base64_decode("Zm9vYg=="), bytes_of("foob"));
  EXPECT_EQ(base64_decode("Zm9vYmE="), bytes_of("fooba"));
  EXPECT_THROW(base64_decode("Zm9"), ImageIoError);
}

TEST(ImageIo, Sha256KnownVectors) {
  EXPECT_EQ(sha256_hex(std::string_view("abc")), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex(std::string_view("")), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(ImageIo, ColorPngIsLossless) {
  ColorImage img{17, 9, {}};
  Rng rng(5);
  for (int i = 0; i < 17 * 9 * 3; ++i) img.rgb.push_back(static_cast<std::uint8_t>(rng() & 0xff));
  const ColorImage back = decode_color_png(encode_color_png(img));
  EXPECT_EQ(back, img);
}

TEST(ImageIo, DepthPngKeepsMillimeters) {
  DepthImage img{13, 7, {}};
  for (int i = 0; i < 13 * 7; ++i) img.meters.push_back(static_cast<float>((i * 37 % 200) / 1000.0));
  const DepthImage back = decode_depth_png(encode_depth_png(img));
  ASSERT_EQ(back.meters.size(), img.meters.size());
  for (std::size_t i = 0; i < img.meters.size(); ++i) EXPECT_NEAR(back.meters[i], img.meters[i], 1e-6);
  // Sub-millimeter detail is rounded.
  DepthImage fine{1, 1, {0.0426f}};
  EXPECT_NEAR(decode_depth_png(encode_depth_png(fine)).meters[0], 0.043, 1e-6);
}

TEST(ImageIo, GarbageIsRejected) {
  Bytes png = encode_color_png(ColorImage{2, 2, Bytes(12, 7)});
  png.resize(png.size() / 2);
  EXPECT_THROW(decode_color_png(png), ImageIoError);
  EXPECT_THROW(decode_depth_png(bytes_of("not a png")), ImageIoError);
}

TEST(Render, NoiselessRastersShowHeightsAndColors) {
  SceneState s;
  s.add(make(ObjectKind::block, Color::red, 0.25, 0.25));
  s.add(make(ObjectKind::block, Color::blue, 0.25, 0.25, BlockSize::small));
  s.at(1).supported_by = 0;
  s.add(make(ObjectKind::zone, Color::green, 0.75, 0.25));
  const WorkspaceConfig cfg;
  Rng rng(1);
  const Observation obs = render(s, cfg, rng, false);
  ASSERT_EQ(obs.color.width, 320);
  ASSERT_EQ(obs.color.height, 160);
  // Center pixel of the stack: the small block sits on the big one.
  EXPECT_NEAR(obs.depth.at(80, 80), kBigBlockEdge + kSmallBlockEdge, 1e-6);
  EXPECT_EQ(obs.color.at(80, 80), palette(Color::blue));
  // Outer ring of the big block shows red at the big block's height.
  EXPECT_NEAR(obs.depth.at(76, 80), kBigBlockEdge, 1e-6);
  EXPECT_EQ(obs.color.at(76, 80), palette(Color::red));
  EXPECT_NEAR(obs.depth.at(240, 80), kZoneHeight, 1e-6);
  EXPECT_EQ(obs.depth.at(5, 5), 0.0f);
  EXPECT_EQ(obs.color.at(5, 5), kTableColor);

  Rng a(9), b(9);
  EXPECT_EQ(render(s, cfg, a, true).color, render(s, cfg, b, true).color);
}

TEST(Goal, ZoneMatchNeedsMoreThanHalfTheFootprint) {
  SceneState s;
  const int zone = s.add(make(ObjectKind::zone, Color::green, 0.5, 0.25));
  const int blk = s.add(make(ObjectKind::block, Color::red, 0.5, 0.25));
  GoalCondition g;
  g.sub_goals.push_back({blk, InRegions{{zone}, zone}, std::nullopt, true});
  EXPECT_TRUE(g.done(s));
  // Zone spans [0.44, 0.56]; block edge 0.04.
  s.at(blk).pose.x = 0.561;
  EXPECT_FALSE(g.done(s));
  s.at(blk).pose.x = 0.559;
  EXPECT_TRUE(g.done(s));
}

TEST(Goal, PoseMatchUsesPositionAndSymmetricYaw) {
  SceneState s;
  const int base = s.add(make(ObjectKind::block, Color::red, 0.5, 0.25));
  const int top = s.add(make(ObjectKind::block, Color::blue, 0.5, 0.25, BlockSize::small, kPi / 2));
  s.at(top).supported_by = base;
  GoalCondition g;
  g.sub_goals.push_back({top, OnBlock{base}, std::nullopt, true});
  EXPECT_TRUE(g.done(s));
  s.at(top).pose.yaw = 0.2;  // about 11.5 degrees
  EXPECT_TRUE(g.done(s));
  s.at(top).pose.yaw = 0.3;  // about 17 degrees
  EXPECT_FALSE(g.done(s));
  s.at(top).pose = {0.5 + 0.0099, 0.25, 0.0};
  EXPECT_TRUE(g.done(s));
  s.at(top).pose = {0.5 + 0.011, 0.25, 0.0};
  EXPECT_FALSE(g.done(s));
  // Right pose but not resting on the base.
  s.at(top).pose = {0.5, 0.25, 0.0};
  s.at(top).supported_by.reset();
  EXPECT_FALSE(g.done(s));
}

TEST(Goal, DependenciesGateStackedSubGoals) {
  SceneState s;
  const int a = s.add(make(ObjectKind::block, Color::red, 0.2, 0.25));
  const int b = s.add(make(ObjectKind::block, Color::blue, 0.6, 0.25));
  const int c = s.add(make(ObjectKind::block, Color::green, 0.6, 0.25, BlockSize::small));
  s.at(c).supported_by = b;
  GoalCondition g;
  g.sub_goals.push_back({b, OnBlock{a}, std::nullopt, true});
  g.sub_goals.push_back({c, OnBlock{b}, 0, true});
  EXPECT_EQ(g.satisfied_count(s), 0u);
  EXPECT_TRUE(g.holds_locally(s, 1));
  g.sub_goals[0].scored = false;
  EXPECT_EQ(g.scored_count(), 1u);
}

TEST(Goal, OffsetAndTablePredicates) {
  SceneState s;
  const int ref = s.add(make(ObjectKind::block, Color::red, 0.5, 0.25));
  const int blk = s.add(make(ObjectKind::block, Color::blue, 0.4, 0.25));
  GoalCondition g;
  g.sub_goals.push_back({blk, AtOffset{ref, Direction::left, kRelativeOffset}, std::nullopt, true});
  g.sub_goals.push_back({blk, OnTable{}, std::nullopt, true});
  EXPECT_EQ(g.satisfied_count(s), 2u);
  g.sub_goals[0].predicate = AtOffset{ref, Direction::above, kRelativeOffset};
  s.at(blk).pose = {0.5, 0.15, 0.0};
  EXPECT_EQ(g.satisfied_count(s), 2u);
  s.at(blk).pose = {0.5, 0.25, 0.0};
  s.at(blk).supported_by = ref;
  EXPECT_EQ(g.satisfied_count(s), 0u);
}

TEST(Goal, AreaMatchUsesQuadrants) {
  SceneState s;
  const int blk = s.add(make(ObjectKind::block, Color::red, 0.2, 0.1));
  GoalCondition g;
  g.sub_goals.push_back({blk, InArea{AreaName::top_left}, std::nullopt, true});
  EXPECT_TRUE(g.done(s));
  g.sub_goals[0].predicate = InArea{AreaName::bottom_left};
  EXPECT_FALSE(g.done(s));
  EXPECT_EQ(area_from_string("bottom-right"), AreaName::bottom_right);
  EXPECT_THROW(area_from_string("middle"), std::invalid_argument);
}

TEST(SubTask, TextIsRenderedFromStructure) {
  SceneState s;
  s.add(make(ObjectKind::block, Color::red, 0.2, 0.25, BlockSize::small));
  s.add(make(ObjectKind::block, Color::blue, 0.6, 0.25));
  s.add(make(ObjectKind::bowl, Color::green, 0.8, 0.25));
  const auto on_block = make_subtask(ObjectRef::of(s.at(0)), SubTaskTarget::on_object(s.at(1)));
  EXPECT_EQ(on_block.text, "Pick up the small red block and place it on the big blue block.");
  EXPECT_EQ(render_text(make_subtask(ObjectRef::of(s.at(0)), SubTaskTarget::on_object(s.at(2))), Phrasing::put),
            "Put the small red block in the green bowl.");
  EXPECT_EQ(make_subtask(ObjectRef::of(s.at(0)), SubTaskTarget::in_area(AreaName::top_right)).text,
            "Pick up the small red block and place it in the top-right area.");
  EXPECT_EQ(make_subtask(ObjectRef::of(s.at(0)), SubTaskTarget::relative_to(s.at(1), Direction::left)).text,
            "Pick up the small red block and place it to the left of the big blue block.");
  EXPECT_EQ(make_subtask(ObjectRef::of(s.at(0)), SubTaskTarget::table()).text,
            "Pick up the small red block and place it on the table.");
}

TEST(SubTask, ResolutionAndEquivalence) {
  SceneState s;
  s.add(make(ObjectKind::block, Color::red, 0.2, 0.25, BlockSize::small));
  s.add(make(ObjectKind::block, Color::red, 0.4, 0.25, BlockSize::big));
  s.add(make(ObjectKind::bowl, Color::green, 0.8, 0.25));
  SubTask st;
  st.source = {std::nullopt, ObjectKind::block, Color::red, BlockSize::big};
  st.target.kind = TargetKind::object;
  st.target.object = ObjectRef{std::nullopt, ObjectKind::bowl, Color::green, std::nullopt};
  const SubTask r = resolve(st, s);
  EXPECT_EQ(r.source.id, 1);
  EXPECT_EQ(r.target.object->id, 2);
  EXPECT_EQ(r.text, "Pick up the big red block and place it in the green bowl.");

  st.source.size.reset();
  EXPECT_THROW(resolve(st, s), SubTaskResolutionError);
  st.source = {std::nullopt, ObjectKind::block, Color::blue, std::nullopt};
  EXPECT_THROW(resolve(st, s), SubTaskResolutionError);
  st.source = ObjectRef::of(s.at(2));
  EXPECT_THROW(resolve(st, s), SubTaskResolutionError);

  SubTask worded = r;
  worded.text = "something else entirely";
  EXPECT_TRUE(same_intent(r, worded));
  SubTask other = make_subtask(ObjectRef::of(s.at(1)), SubTaskTarget::table());
  EXPECT_FALSE(subtask_equivalent(other, {r}));
  EXPECT_TRUE(subtask_equivalent(other, {r, other}));
}

TEST(Serialize, SceneGoalAndSubTaskRoundTrip) {
  SceneState s;
  s.add(make(ObjectKind::zone, Color::gray, 0.8, 0.4));
  s.add(make(ObjectKind::block, Color::red, 0.2, 0.25, BlockSize::small, 0.3));
  s.add(make(ObjectKind::block, Color::blue, 0.2, 0.25, BlockSize::big, -1.1));
  s.at(1).supported_by = 2;
  s.time = 4;
  s.credited_fraction = 0.25;
  EXPECT_EQ(scene_from_json(json::parse(to_json(s).dump())), s);

  GoalCondition g;
  g.sub_goals.push_back({1, InRegions{{0}, 0}, std::nullopt, true});
  g.sub_goals.push_back({2, InArea{AreaName::bottom_left}, std::nullopt, false});
  g.sub_goals.push_back({1, OnBlock{2}, 1, true});
  g.sub_goals.push_back({2, AtOffset{1, Direction::below, 0.1}, std::nullopt, true});
  g.sub_goals.push_back({1, OnTable{}, std::nullopt, true});
  EXPECT_EQ(goal_from_json(json::parse(to_json(g).dump())), g);

  for (const auto& target : {SubTaskTarget::on_object(s.at(0)), SubTaskTarget::in_area(AreaName::top_left),
                             SubTaskTarget::table(), SubTaskTarget::relative_to(s.at(2), Direction::right)}) {
    const SubTask st = make_subtask(ObjectRef::of(s.at(1)), target);
    EXPECT_EQ(subtask_from_json(json::parse(to_json(st).dump())), st);
  }
  const Action a{{0.1, 0.2, 0.3}, {0.4, 0.45, -3.0}};
  EXPECT_EQ(action_from_json(to_json(a)), a);
}

TEST(Serialize, MalformedInputIsAParseError) {
  EXPECT_THROW(subtask_from_json(json::parse(R"({"source":{"kind":"block","color":"red"}})")), ParseError);
  EXPECT_THROW(subtask_from_json(json::parse(R"({"source":{"kind":"block","color":"mauve"},"target":{"kind":"table"}})")),
               ParseError);
  EXPECT_THROW(subtask_from_json(json::parse(R"({"source":{"kind":"block","color":"red"},"target":{"kind":"area"}})")),
               ParseError);
  EXPECT_THROW(subtask_from_json(json::parse(R"({"verb":"push","source":{"kind":"block","color":"red"},"target":{"kind":"table"}})")),
               ParseError);
  const SubTask st = subtask_from_json(
      json::parse(R"({"source":{"kind":"block","color":"red","size":"small"},"target":{"kind":"table"}})"));
  EXPECT_EQ(st.text, "Pick up the small red block and place it on the table.");
}
