#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(RADARFIELD_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::filesystem::path scratch(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("radarfield_cli_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST(Cli, HelpSucceeds) { EXPECT_EQ(run("--help"), 0); }

TEST(Cli, BadInvocationExitsWithTwo) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("simulate /nonexistent/scene.json " + scratch("missing").string()), 2);
  EXPECT_EQ(run("train --data /nonexistent --out " + scratch("t").string()), 2);
  EXPECT_EQ(run("eval --mesh /nonexistent.ply --gt /nonexistent.ply --out x.json"), 2);
}

TEST(Cli, BadConfigExitsWithTwo) {
  const auto dir = scratch("cfg");
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "bad.cfg") << "trainer.no_such_key = 3\n";
  EXPECT_EQ(run("train --data " + dir.string() + " --out " + (dir / "o").string() + " --config " +
                (dir / "bad.cfg").string()),
            2);
  EXPECT_EQ(run("train --data " + dir.string() + " --out " + (dir / "o").string() + " --set mesh.voxel_size=-1"), 2);
}

TEST(Cli, SimulateWritesDataset) {
  const auto dir = scratch("sim");
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "scene.json") << R"({"seed": 1, "bounds": {"min": [-3,-3,-1], "max": [3,3,2]},
    "primitives": [{"type": "plane", "point": [0,0,0], "normal": [0,0,1]}],
    "radar": {"rays_azimuth": 8, "rays_elevation": 4, "fov_elevation_deg": 20},
    "trajectory": {"type": "circle", "frames": 2, "radius": 2, "height": 1.5}})";
  ASSERT_EQ(run("simulate " + (dir / "scene.json").string() + " " + (dir / "data").string()), 0);
  EXPECT_TRUE(std::filesystem::exists(dir / "data" / "frames.txt"));
  EXPECT_TRUE(std::filesystem::exists(dir / "data" / "gt_points.ply"));
}
