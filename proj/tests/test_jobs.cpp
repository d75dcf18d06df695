#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace hospigrid;
using namespace hospigrid::jobs;

TEST_CASE("random placement matches an independent transcription of the mixer") {
  for (std::uint64_t seed : {0ull, 1ull, 42ull, 0xdeadbeefull}) {
    for (std::uint64_t ordinal = 0; ordinal < 200; ++ordinal) {
      for (std::size_t live : {1u, 2u, 3u, 7u}) {
        CHECK(random_site_index(seed, ordinal, live) ==
              std::size_t(testutil::reference_mix(seed, ordinal) % live));
      }
    }
  }
  CHECK_THROWS_AS(random_site_index(1, 0, 0), GridError);
}

TEST_CASE("random placement spreads jobs across sites") {
  std::size_t counts[3] = {0, 0, 0};
  for (std::uint64_t ordinal = 0; ordinal < 300; ++ordinal)
    ++counts[random_site_index(7, ordinal, 3)];
  for (std::size_t c : counts) CHECK(c > 50);
}

TEST_CASE("data-local placement picks the site with the most input bytes") {
  CHECK(data_local_site({{"oxford", 100}, {"udine", 900}, {"cambridge", 200}}) ==
        "udine");
  // ties break by name order
  CHECK(data_local_site({{"udine", 500}, {"cambridge", 500}}) == "cambridge");
  CHECK(data_local_site({{"zeta", 0}, {"alpha", 0}}) == "alpha");
  CHECK_THROWS_AS(data_local_site({}), GridError);
}

TEST_CASE("CADe stub findings count follows the pixel length") {
  for (std::size_t len : {0u, 1u, 2u, 3u, 4u, 5u, 17u}) {
    auto file = model::parse_dicom_lite(testutil::make_dcml(
        "p", "pid", "2004-06-01", "MG", "imgX", testutil::pseudo_pixels(1, len)));
    auto report = cade_stub(file);
    CHECK(report.find("findings=" + std::to_string(len % 4) + "\n") !=
          std::string::npos);
    CHECK(report.find("image=imgX") != std::string::npos);
  }
}

TEST_CASE("stub outputs are pure functions of the input bytes") {
  auto file = model::parse_dicom_lite(testutil::make_dcml(
      "p", "pid", "2004-06-01", "MG", "img1", testutil::pseudo_pixels(9, 40)));
  CHECK(smf_stub(file).serialize() == smf_stub(file).serialize());
  CHECK(cade_stub(file) == cade_stub(file));
  CHECK(smf_stub(smf_stub(file)).pixel_data == file.pixel_data);
}

TEST_CASE("the workload report aggregates per policy") {
  std::vector<Placement> ps;
  ps.push_back({"J1", "oxford", PlacementPolicy::data_local(), 0});
  ps.push_back({"J2", "udine", PlacementPolicy::data_local(), 0});
  ps.push_back({"J3", "oxford", PlacementPolicy::random(5), 1000});
  auto report = workload_report(ps);
  CHECK(report.find("DataLocal\t0\t2") != std::string::npos);
  CHECK(report.find("Random(5)\t1000\t1") != std::string::npos);
  CHECK(starts_with(report, "policy\ttotal_wan_bytes\tjob_count\n"));
}

TEST_CASE("job lines parse") {
  auto spec = parse_job_line("JOB J7 CADe /l/a /l/b");
  CHECK(spec.job_id == "J7");
  CHECK(spec.kind == JobKind::CADe);
  CHECK(spec.input_lfns == std::vector<std::string>{"/l/a", "/l/b"});
  CHECK_THROWS_AS(parse_job_line("JOB J7 CADe"), GridError);
  CHECK_THROWS_AS(parse_job_line("JOB J7 nope /l/a"), GridError);
}
