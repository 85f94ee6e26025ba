#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <sys/wait.h>

#include "lbhic/image_io.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
};

Run run(const std::string& args) {
  const fs::path log = fs::temp_directory_path() / "lbhic_cli_test.log";
  const std::string cmd = std::string(LBHIC_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("cli end to end") {
  const fs::path dir = fs::temp_directory_path() / "lbhic_cli";
  fs::create_directories(dir);
  const auto p = [&](const char* name) { return (dir / name).string(); };

  std::mt19937 rng(1);
  lbhic::write_png(p("noise.png"), oracle::random_image(130, 70, rng));

  Run r = run("toygen --config low --seed 42 --out " + p("toy.lbhw"));
  REQUIRE(r.code == 0);

  r = run("encode --in " + p("noise.png") + " --weights " + p("toy.lbhw") +
          " --config low --block 64 --workers 1 --out " + p("w1.lbhc"));
  REQUIRE(r.code == 0);
  CHECK(r.out.find("bpp") != std::string::npos);
  CHECK(r.out.find("Decode Entropy") != std::string::npos);
  r = run("encode --in " + p("noise.png") + " --weights " + p("toy.lbhw") +
          " --config low --block 64 --workers 8 --out " + p("w8.lbhc"));
  REQUIRE(r.code == 0);
  CHECK(slurp(p("w1.lbhc")) == slurp(p("w8.lbhc")));

  r = run("decode --in " + p("w8.lbhc") + " --weights " + p("toy.lbhw") + " --workers 2 --no-bpm --out " +
          p("rec.png"));
  REQUIRE(r.code == 0);
  const lbhic::Image rec = lbhic::read_png(p("rec.png"));
  CHECK(rec.width == 130);
  CHECK(rec.height == 70);

  r = run("metrics --a " + p("rec.png") + " --b " + p("rec.png") + " --scales 3");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("psnr 99.000000") != std::string::npos);
  CHECK(r.out.find("ms_ssim 1.000000") != std::string::npos);

  r = run("satd --a " + p("rec.png") + " --b " + p("rec.png"));
  CHECK(r.code == 0);
  CHECK(r.out.find("satd 0.0") != std::string::npos);

  std::ofstream(p("a.csv")) << "bpp,psnr\n0.1,30\n0.2,33\n0.4,36\n0.8,39\n";
  std::ofstream(p("b.csv")) << "bpp,psnr\n0.2,30\n0.4,33\n0.8,36\n1.6,39\n";
  r = run("bdrate --anchor " + p("a.csv") + " --test " + p("b.csv"));
  CHECK(r.code == 0);
  CHECK(r.out.find("bd_rate 100.0000%") != std::string::npos);

  r = run("correlate --block 16 --out " + p("corr.csv") + " " + p("noise.png") + " " + p("rec.png"));
  CHECK(r.code == 0);
  CHECK(slurp(p("corr.csv")).rfind("target_y", 0) == 0);

  fs::remove_all(dir);
}

TEST_CASE("cli errors") {
  CHECK(run("").code != 0);
  Run r = run("frobnicate");
  CHECK(r.code != 0);
  r = run("metrics --a x.png --b y.png --bogus");
  CHECK(r.code != 0);
  CHECK(r.out.find("--bogus") != std::string::npos);
  r = run("decode --in /nonexistent.lbhc --weights /nonexistent.lbhw --out /tmp/x.png");
  CHECK(r.code == 1);
  CHECK(r.out.find("error [decode]") != std::string::npos);
  CHECK(run("--help").code == 0);
}
