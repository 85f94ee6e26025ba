// lbhic command-line tool: codec front end and analysis utilities.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "lbhic/bpm.hpp"
#include "lbhic/container.hpp"
#include "lbhic/image_io.hpp"
#include "lbhic/metrics.hpp"
#include "lbhic/pipeline.hpp"
#include "lbhic/weights.hpp"

namespace {

using namespace lbhic;

int default_workers() {
  if (const char* env = std::getenv("LBHIC_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
    std::cerr << "warning: ignoring LBHIC_THREADS='" << env << "'\n";
  }
  return kDefaultWorkers;
}

ModelConfig parse_config(const std::string& name, int block) {
  if (name == "low") return ModelConfig::low(block);
  if (name == "high") return ModelConfig::high(block);
  throw ConfigError("unknown config '" + name + "' (expected low or high)");
}

void print_timings(const StageTimings& t) {
  const double total = t.total();
  auto row = [&](const char* name, double s) {
    std::printf("  %-24s %9.3f s  %6.2f%%\n", name, s, total > 0 ? 100.0 * s / total : 0.0);
  };
  row("CPM", t.cpm);
  row("Transformation", t.transform);
  row("Encode Entropy", t.encode_entropy);
  row("Inverse Transformation", t.inverse_transform);
  row("Decode Entropy", t.decode_entropy);
  row("BPM", t.bpm);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learned block-based hybrid image codec"};
  app.require_subcommand(1);
  const int workers_default = default_workers();

  std::string in, out, weights_path, config = "low";
  int block = 128;
  int workers = workers_default;
  bool no_bpm = false;

  auto* encode = app.add_subcommand("encode", "Compress a PNG into an .lbhc container");
  encode->add_option("--in", in, "Input PNG")->required();
  encode->add_option("--weights", weights_path, "Weight file (.lbhw)")->required();
  encode->add_option("--config", config, "Model configuration")->check(CLI::IsMember({"low", "high"}));
  encode->add_option("--block", block, "Block size (multiple of 64)");
  encode->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  encode->add_flag("--no-bpm", no_bpm, "Mark the stream as not wanting postprocessing");
  encode->add_option("--out", out, "Output container")->required();

  auto* decode = app.add_subcommand("decode", "Decompress an .lbhc container to PNG");
  decode->add_option("--in", in, "Input container")->required();
  decode->add_option("--weights", weights_path, "Weight file (.lbhw)")->required();
  decode->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  decode->add_flag("--no-bpm", no_bpm, "Skip boundary postprocessing");
  decode->add_option("--out", out, "Output PNG")->required();

  std::string a_path, b_path;
  int scales = kMsSsimScales;
  auto* metrics = app.add_subcommand("metrics", "PSNR and MS-SSIM between two PNGs");
  metrics->add_option("--a", a_path, "Reference PNG")->required();
  metrics->add_option("--b", b_path, "Distorted PNG")->required();
  metrics->add_option("--scales", scales, "MS-SSIM scales")->check(CLI::Range(1, kMsSsimScales));

  auto* satd_cmd = app.add_subcommand("satd", "SATD of the difference between two PNGs");
  satd_cmd->add_option("--a", a_path, "First PNG")->required();
  satd_cmd->add_option("--b", b_path, "Second PNG")->required();

  std::string anchor_csv, test_csv, quality = "psnr";
  auto* bdrate = app.add_subcommand("bdrate", "BD-rate of a test RD curve against an anchor");
  bdrate->add_option("--anchor", anchor_csv, "Anchor CSV (columns bpp and the quality column)")->required();
  bdrate->add_option("--test", test_csv, "Test CSV")->required();
  bdrate->add_option("--quality", quality, "Quality column name");

  std::vector<std::string> images;
  CorrelationOptions corr;
  auto* correlate = app.add_subcommand("correlate", "Neighbour-block pixel correlation table as CSV");
  correlate->add_option("images", images, "Input PNGs")->required()->expected(2, -1);
  correlate->add_option("--block", block, "Block size");
  correlate->add_option("--samples", corr.target_samples, "Target pixels sampled per block");
  correlate->add_option("--stride", corr.reference_stride, "Reference grid stride");
  correlate->add_option("--seed", corr.seed, "Sampling seed");
  correlate->add_option("--out", out, "Output CSV (stdout if omitted)");

  std::uint64_t seed = 42;
  auto* toygen = app.add_subcommand("toygen", "Write deterministic toy weights");
  toygen->add_option("--config", config, "Model configuration")->check(CLI::IsMember({"low", "high"}));
  toygen->add_option("--seed", seed, "Seed");
  toygen->add_option("--out", out, "Output .lbhw")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return e.get_exit_code() == 0 ? 0 : (code == 0 ? 2 : code);
  }

  try {
    if (*encode) {
      const ModelConfig cfg = parse_config(config, block);
      const Image image = read_png(in);
      const WeightStore weights = load_weights(weights_path);
      const EncodeResult r = encode_image(image, weights, cfg, {workers, !no_bpm});
      const auto bytes = write_container(r.container);
      save_container(r.container, out);
      std::printf("%s: %dx%d, %zu blocks, %zu bytes, %.4f bpp\n", out.c_str(), image.width, image.height,
                  r.container.blocks.size(), bytes.size(), lbhic::bpp(bytes.size(), image.height, image.width));
      print_timings(r.timings);
    } else if (*decode) {
      const BitstreamContainer container = load_container(in);
      const WeightStore weights = load_weights(weights_path);
      const DecodeResult r = decode_image(container, weights, workers, !no_bpm);
      write_png(out, r.image);
      std::printf("%s: %dx%d\n", out.c_str(), r.image.width, r.image.height);
      print_timings(r.timings);
    } else if (*metrics) {
      const Image a = read_png(a_path);
      const Image b = read_png(b_path);
      std::printf("psnr %.6f\nms_ssim %.6f\n", psnr(a, b), ms_ssim(a, b, scales));
    } else if (*satd_cmd) {
      const Image a = read_png(a_path);
      const Image b = read_png(b_path);
      std::printf("satd %.1f\n", satd(subtract(image_to_tensor(a), image_to_tensor(b))));
    } else if (*bdrate) {
      std::ifstream fa(anchor_csv), ft(test_csv);
      if (!fa) throw Error("cannot open '" + anchor_csv + "'");
      if (!ft) throw Error("cannot open '" + test_csv + "'");
      const auto anchor = read_rd_csv(fa, quality);
      const auto test = read_rd_csv(ft, quality);
      std::printf("bd_rate %.4f%%\n", bd_rate(anchor, test));
    } else if (*correlate) {
      std::vector<Image> loaded;
      for (const auto& p : images) loaded.push_back(read_png(p));
      const CorrelationTable table = correlation_study(loaded, block, corr);
      if (out.empty()) {
        write_correlation_csv(std::cout, table);
      } else {
        std::ofstream f(out);
        if (!f) throw Error("cannot write '" + out + "'");
        write_correlation_csv(f, table);
      }
      if (table.skipped > 0) std::cerr << "skipped " << table.skipped << " zero-variance pairs\n";
    } else if (*toygen) {
      save_weights(toy_init(parse_config(config, 128), seed), out);
      std::printf("%s\n", out.c_str());
    }
  } catch (const std::exception& e) {
    std::cerr << "error [" << app.get_subcommands().front()->get_name() << "]: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
