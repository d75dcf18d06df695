// Clinician-facing console and scenario batch runner.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "hospigrid/hospigrid.hpp"

using namespace hospigrid;

int main(int argc, char** argv) {
  CLI::App app{"hospigrid - federated mammogram grid console"};

  std::string topology_path;
  std::string site;
  std::string backend = "inproc";
  std::uint64_t seed = 0;
  std::string script_path;
  std::string data_dir;

  app.add_option("--topology", topology_path, "topology declaration file")->required();
  app.add_option("--site", site, "console site name")->required();
  app.add_option("--backend", backend, "inproc|socket")
      ->check(CLI::IsMember({"inproc", "socket"}));
  app.add_option("--seed", seed, "scenario seed");
  app.add_option("--script", script_path, "scenario script; omit for interactive use");
  app.add_option("--data-dir", data_dir, "persistent data directory");

  CLI11_PARSE(app, argc, argv);

  if (data_dir.empty())
    if (const char* env = std::getenv("HOSPIGRID_DATA_DIR")) data_dir = env;

  try {
    std::ifstream topo_in(topology_path);
    if (!topo_in) {
      std::cerr << "cannot read topology file " << topology_path << "\n";
      return 2;
    }
    auto topology = federation::load_topology(topo_in);

    Grid::Options options;
    options.data_dir = data_dir;
    options.seed = seed;
    options.backend = backend == "socket" ? Backend::socket : Backend::inproc;
    Grid grid(std::move(topology), options);
    grid.add_default_users();

    console::Console con(grid, site);

    if (!script_path.empty()) {
      std::ifstream in(script_path);
      if (!in) {
        std::cerr << "cannot read script " << script_path << "\n";
        return 2;
      }
      std::vector<std::string> lines;
      std::string line;
      while (std::getline(in, line)) lines.push_back(line);
      auto res = con.run_script(lines);
      std::cout << res.transcript;
      return res.exit_code;
    }

    std::string line;
    std::cout << con.site() << "> " << std::flush;
    while (std::getline(std::cin, line)) {
      std::cout << con.exec(line);
      if (con.quit_requested()) return 0;
      std::cout << con.site() << "> " << std::flush;
    }
    return 0;
  } catch (const GridError& e) {
    std::cerr << "fatal: " << e.what() << "\n";
    return 2;
  }
}
