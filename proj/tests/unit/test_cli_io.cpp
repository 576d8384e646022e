#include <doctest.h>

#include <filesystem>
#include <random>

#include "io.hpp"
#include "support.hpp"
#include "totr/error.hpp"

using namespace totr;
using namespace totr::cli;

namespace {

MotionSequence random_angles(std::size_t frames, const Skeleton& skel, bool root, std::mt19937_64& rng) {
  MotionSequence seq{test::random_tensor({frames, skel.segment_count(), 3}, rng), 60.0, MotionSpace::JointAngle,
                     std::nullopt};
  if (root) seq.root_track = test::random_tensor({frames, 3}, rng);
  return seq;
}

}  // namespace

TEST_CASE("angle tables round trip bit for bit") {
  const Skeleton skel = Skeleton::default_upper_body();
  std::mt19937_64 rng(71);
  for (bool root : {false, true}) {
    const MotionSequence seq = random_angles(7, skel, root, rng);
    const MotionSequence back = parse_angle_table(format_angle_table(seq, skel), skel, 60.0);
    CHECK(back.frames == seq.frames);
    REQUIRE(back.root_track.has_value() == root);
    if (root) CHECK(*back.root_track == *seq.root_track);
  }
}

TEST_CASE("angle table header names segment end joints") {
  const Skeleton skel = Skeleton::default_upper_body();
  std::mt19937_64 rng(72);
  const std::string text = format_angle_table(random_angles(1, skel, false, rng), skel);
  const std::string first = skel.joints()[skel.segments()[0]].name;
  CHECK(text.rfind("frame," + first + "_ax," + first + "_ay," + first + "_az,", 0) == 0);
}

TEST_CASE("malformed angle tables are rejected with their row") {
  const Skeleton skel = Skeleton::default_upper_body();
  std::mt19937_64 rng(73);
  std::string text = format_angle_table(random_angles(3, skel, false, rng), skel);
  CHECK_THROWS_AS(parse_angle_table("frame,a,b\n0,1,2\n", skel, 60.0), DataError);
  std::string broken = text;
  broken.replace(broken.rfind(',') + 1, std::string::npos, "oops\n");
  CHECK_THROWS_WITH_AS(parse_angle_table(broken, skel, 60.0), doctest::Contains("row 4"), DataError);
  const auto cut = text.find('\n', text.find('\n') + 1);
  CHECK_THROWS_WITH_AS(parse_angle_table(text.substr(0, cut) + "\n1,2\n", skel, 60.0),
                       doctest::Contains("columns"), DataError);
}

TEST_CASE("band tables round trip") {
  const Skeleton skel = Skeleton::default_upper_body();
  std::mt19937_64 rng(74);
  std::vector<BandRow> rows{{0, 39, test::random_tensor({4, 9, 3}, rng)}, {3, 45, test::random_tensor({4, 9, 3}, rng)}};
  const auto back = parse_bands(format_bands(rows, skel), skel);
  REQUIRE(back.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back[i].model_index == rows[i].model_index);
    CHECK(back[i].time_index == rows[i].time_index);
    CHECK(back[i].deviation == rows[i].deviation);
  }
}

TEST_CASE("sha256 of a known message") {
  const auto path = std::filesystem::temp_directory_path() / "totr_sha_test.txt";
  write_file(path, "abc");
  CHECK(sha256_file(path) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  std::filesystem::remove(path);
  CHECK_THROWS_AS(sha256_file(path), DataError);
}

TEST_CASE("index lists") {
  CHECK(parse_index_list("").empty());
  CHECK(parse_index_list("3") == std::vector<std::size_t>{3});
  CHECK(parse_index_list("0,2,5") == std::vector<std::size_t>{0, 2, 5});
  CHECK_THROWS_AS(parse_index_list("1,x"), DataError);
  CHECK_THROWS_AS(parse_index_list("1,,2"), DataError);
}
