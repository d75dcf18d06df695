#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "helpers.hpp"

using namespace hospigrid;

namespace {

std::string write_sample(const std::string& tag, const Bytes& bytes) {
  auto path = std::filesystem::temp_directory_path() / ("hospigrid-con-" + tag + ".dcml");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  return path.string();
}

struct ConsoleFixture {
  Grid grid{federation::load_topology(testutil::p15_topology_text()),
            testutil::inproc_options()};
  console::Console con{grid, "cambridge"};

  ConsoleFixture() { grid.add_default_users(); }
};

}  // namespace

TEST_CASE("script validation happens before anything executes") {
  ConsoleFixture fx;
  // the bad command on line 2 aborts the whole script up front
  CHECK_THROWS_AS(fx.con.run_script({"login clinician", "definitely-not-a-command"}),
                  GridError);
  auto before = fx.grid.state_snapshot();
  CHECK_THROWS_AS(fx.con.run_script({"login clinician", "query sideways images"}),
                  GridError);
  CHECK(fx.grid.state_snapshot() == before);
}

TEST_CASE("invalid commands surface as E_SYNTAX without ending the session") {
  ConsoleFixture fx;
  CHECK(starts_with(fx.con.exec("frobnicate"), "error E_SYNTAX"));
  CHECK(starts_with(fx.con.exec("mirror /only-one-arg"), "error E_SYNTAX"));
  CHECK(starts_with(fx.con.exec("query sideways images"), "error E_SYNTAX"));
  // the console is still usable
  CHECK(starts_with(fx.con.exec("login clinician"), "session opened"));
}

TEST_CASE("operations without a session are rejected with E_RIGHTS") {
  ConsoleFixture fx;
  CHECK(starts_with(fx.con.exec("query local images"), "error E_RIGHTS"));
  CHECK(starts_with(fx.con.exec("get /l/x"), "error E_RIGHTS"));
}

TEST_CASE("login reports the granted rights and unknown users fail") {
  ConsoleFixture fx;
  auto out = fx.con.exec("login clinician");
  CHECK(out.find("rights=") != std::string::npos);
  CHECK(out.find("query_global") != std::string::npos);
  CHECK(out.find("admin") == std::string::npos);  // not granted to clinician
  CHECK(starts_with(fx.con.exec("login mallory"), "error E_NOUSER"));
}

TEST_CASE("an import/query/mirror/get session end to end") {
  ConsoleFixture fx;
  auto path = write_sample("e2e", testutil::make_dcml("Doe^J", "ID9", "2004-06-01",
                                                      "MG", "imgE2E",
                                                      testutil::pseudo_pixels(1, 16)));
  fx.con.exec("login clinician");
  auto imported = fx.con.exec("import " + path);
  CHECK(starts_with(imported, "imported /mammogrid/cambridge/imgE2E.dcml"));
  // re-import of the same image id is an error, session continues
  CHECK(starts_with(fx.con.exec("import " + path), "error E_DUPIMG"));

  auto q = fx.con.exec("query local images modality=MG");
  CHECK(q.find("imgE2E") != std::string::npos);
  CHECK(q.find("rows 1 dedup 0 sites 1") != std::string::npos);

  auto m = fx.con.exec("mirror /mammogrid/cambridge/imgE2E.dcml udine");
  CHECK(starts_with(m, "mirrored /mammogrid/cambridge/imgE2E.dcml to udine"));
  CHECK(starts_with(fx.con.exec("mirror /mammogrid/cambridge/imgE2E.dcml udine"),
                    "error E_ALREADYREPLICATED"));

  auto g = fx.con.exec("get /mammogrid/cambridge/imgE2E.dcml");
  CHECK(starts_with(g, "got /mammogrid/cambridge/imgE2E.dcml"));
  CHECK(g.find("mode=direct") != std::string::npos);  // held locally

  auto c = fx.con.exec("cat /mammogrid/cambridge/imgE2E.dcml");
  CHECK(c.find("Modality=MG") != std::string::npos);
  CHECK(c.find("PIXELS 16") != std::string::npos);
  CHECK(c.find("Doe^J") == std::string::npos);  // pseudonymized at import

  auto s = fx.con.exec("submit SMF /mammogrid/cambridge/imgE2E.dcml");
  CHECK(s.find("status=Done") != std::string::npos);
  CHECK(fx.con.exec("jobs").find("J1\tDone") != std::string::npos);
}

TEST_CASE("expect assertions pass, fail with a line number, and stop the script") {
  ConsoleFixture fx;
  auto ok = fx.con.run_script({"login clinician", "expect session opened"});
  CHECK(ok.exit_code == 0);

  ConsoleFixture fx2;
  auto bad = fx2.con.run_script(
      {"login clinician", "expect banana phone", "topology"});
  CHECK(bad.exit_code == 1);
  CHECK(bad.transcript.find("assertion failed at line 2") != std::string::npos);
  CHECK(bad.transcript.find("> topology") == std::string::npos);  // never ran
}

TEST_CASE("scripts produce deterministic transcripts") {
  auto path = write_sample("det", testutil::make_dcml("A^B", "ID1", "2004-02-02",
                                                      "CR", "imgDET"));
  std::vector<std::string> script{
      "login clinician", "import " + path, "query local images", "topology", "quit"};
  ConsoleFixture a, b;
  auto ra = a.con.run_script(script);
  auto rb = b.con.run_script(script);
  CHECK(ra.exit_code == 0);
  CHECK(ra.transcript == rb.transcript);
  CHECK(ra.transcript.find("> quit\nbye\n") != std::string::npos);
}

TEST_CASE("the site command moves the console and drops the session") {
  ConsoleFixture fx;
  fx.con.exec("login clinician");
  CHECK(fx.con.exec("site oxford") == "console at oxford\n");
  CHECK(fx.con.site() == "oxford");
  // session belonged to cambridge; a new login is required
  CHECK(starts_with(fx.con.exec("query local images"), "error E_RIGHTS"));
  CHECK(starts_with(fx.con.exec("site atlantis"), "error E_UNKNOWNSITE"));
}

TEST_CASE("an empty script exits 0 with an empty transcript") {
  ConsoleFixture fx;
  auto res = fx.con.run_script({});
  CHECK(res.exit_code == 0);
  CHECK(res.transcript.empty());
  auto res2 = fx.con.run_script({"# just a comment", ""});
  CHECK(res2.exit_code == 0);
  CHECK(res2.transcript.empty());
}

TEST_CASE("the topology command reports mode, sites, and down state") {
  ConsoleFixture fx;
  auto out = fx.con.exec("topology");
  CHECK(starts_with(out, "mode\tP1_5\n"));
  CHECK(out.find("site\toxford") != std::string::npos);
  fx.grid.stop_site("udine");
  CHECK(fx.con.exec("topology").find("site\tudine\t127.0.0.1:0\tdown") !=
        std::string::npos);
}
