#include "clc/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "json.hpp"
#include "clc/codec.hpp"
#include "clc/image_io.hpp"
#include "clc/theory.hpp"

namespace fs = std::filesystem;

namespace clc::cli {

namespace {

std::uint64_t master_seed() {
  if (const char* env = std::getenv("CLC_SEED")) return std::strtoull(env, nullptr, 10);
  return 0;
}

std::vector<std::string> list_images(const std::string& dir) {
  std::vector<std::string> files;
  if (!fs::is_directory(dir)) throw ParseError("not a directory: " + dir);
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    if (ext == ".ppm" || ext == ".pgm") files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::vector<ImagePatch> crop_patches(const std::vector<std::string>& files, int patch) {
  std::vector<ImagePatch> patches;
  for (const auto& f : files) {
    Image img = image_read(f);
    for (int y = 0; y + patch <= img.height; y += patch) {
      for (int x = 0; x + patch <= img.width; x += patch) {
        ImagePatch p(patch, patch, img.channels);
        for (int py = 0; py < patch; ++py)
          for (int px = 0; px < patch; ++px)
            for (int c = 0; c < img.channels; ++c)
              p.at(px, py, c) = img.at(x + px, y + py, c);
        patches.push_back(std::move(p));
      }
    }
  }
  return patches;
}

std::string hex_digest(const std::array<std::uint8_t, 32>& digest) {
  static const char* hex = "0123456789abcdef";
  std::string s;
  for (std::uint8_t b : digest) {
    s.push_back(hex[b >> 4]);
    s.push_back(hex[b & 0xF]);
  }
  return s;
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
}

int cmd_build_dict(const std::string& corpus, const std::string& out, int clusters,
                   int pca_dim, int patch, std::uint64_t seed, int batch, int iters) {
  std::vector<ImagePatch> patches = crop_patches(list_images(corpus), patch);
  if (static_cast<int>(patches.size()) < clusters) {
    std::cerr << "error: corpus yields " << patches.size() << " patches, need at least "
              << clusters << "\n";
    return 2;
  }
  DictionaryBuildConfig cfg;
  cfg.clusters = static_cast<std::uint32_t>(clusters);
  cfg.pca_dim = static_cast<std::uint32_t>(pca_dim);
  cfg.batch = static_cast<std::uint32_t>(batch);
  cfg.iters = static_cast<std::uint32_t>(iters);
  cfg.seed = seed;
  Dictionary dict = build_dictionary(patches, cfg);
  dict_save(dict, out);
  std::cout << "entries " << dict.entries.size() << "\nfeature_dim " << dict.feature_dim()
            << "\nhash " << hex_digest(dict.content_hash) << "\n";
  return 0;
}

struct LoadedDictionary {
  Dictionary dict;
  BallTree tree;
};

LoadedDictionary load_dict(const std::string& path) {
  LoadedDictionary ld{dict_load(path), {}};
  ld.tree = BallTree::build(ld.dict.key_matrix());
  return ld;
}

int cmd_compress(const std::string& input, const std::string& dict_path,
                 const std::string& out, const CompressOptions& opt) {
  Image img = image_read(input);
  LoadedDictionary ld = load_dict(dict_path);
  KvCache cache;
  CompressResult res = compress_image(img, ld.dict, ld.tree, &cache, opt);
  std::ofstream f(out, std::ios::binary);
  if (!f) throw ParseError("cannot open " + out);
  f.write(reinterpret_cast<const char*>(res.bytes.data()),
          static_cast<std::streamsize>(res.bytes.size()));
  if (!f) throw ParseError("write failed for " + out);

  double px = static_cast<double>(img.width) * img.height;
  std::cout << std::fixed << std::setprecision(4) << "bpp " << res.bpp << "\nside_bpp "
            << res.rate.side_info_bits() / px << "\nest_bpp " << res.rate.estimated_bits / px
            << "\nwall_ms " << std::setprecision(1) << res.seconds * 1e3 << "\n";
  return 0;
}

int cmd_decompress(const std::string& input, const std::string& dict_path,
                   const std::string& out) {
  std::vector<std::uint8_t> bytes = read_file(input);
  LoadedDictionary ld = load_dict(dict_path);
  DecompressResult res = decompress_image(bytes, ld.dict);
  image_write(out, res.image);
  return 0;
}

int cmd_eval(const std::string& dict_path, const std::vector<std::string>& pairs) {
  if (pairs.size() < 2 || pairs.size() % 2 != 0) {
    std::cerr << "error: eval expects <original> <bitstream> pairs\n";
    return 2;
  }
  LoadedDictionary ld = load_dict(dict_path);
  double sum_bpp = 0.0, sum_psnr = 0.0;
  int count = 0;
  std::cout << "image,bpp,psnr_db\n";
  for (std::size_t i = 0; i < pairs.size(); i += 2) {
    Image orig = image_read(pairs[i]);
    std::vector<std::uint8_t> bytes = read_file(pairs[i + 1]);
    DecompressResult res = decompress_image(bytes, ld.dict);
    double bpp = 8.0 * bytes.size() / (static_cast<double>(orig.width) * orig.height);
    double quality = psnr(orig, res.image);
    std::cout << pairs[i] << ',' << std::fixed << std::setprecision(4) << bpp << ','
              << std::setprecision(2) << quality << "\n";
    sum_bpp += bpp;
    sum_psnr += quality;
    ++count;
  }
  std::cout << "mean," << std::fixed << std::setprecision(4) << sum_bpp / count << ','
            << std::setprecision(2) << sum_psnr / count << "\n";
  return 0;
}

struct BenchRun {
  std::string config;
  int m = 3;
  int clusters = 0;
  double delta = 0.0;
  double bpp = 0.0;
  double psnr_db = 0.0;
  double enc_ms = 0.0;
  double dec_ms = 0.0;
};

int cmd_bench(const std::string& corpus, const std::string& out_csv,
              std::vector<int> cluster_sizes, std::vector<double> steps,
              std::uint64_t seed) {
  std::vector<std::string> files = list_images(corpus);
  if (files.empty()) {
    std::cerr << "error: empty corpus\n";
    return 2;
  }
  std::vector<Image> images;
  for (const auto& f : files) images.push_back(image_read(f));

  // Self-referential patch pool: every image contributes itself.
  std::vector<ImagePatch> patches = images;
  std::ofstream csv(out_csv);
  if (!csv) throw ParseError("cannot open " + out_csv);
  csv << "# schema clc-bench-v1\n";
  csv << "kind,config,m,clusters,delta,bpp,psnr_db,enc_ms,dec_ms,bd_rate_vs_nocond\n";

  auto run_config = [&](const Dictionary& dict, const BallTree& tree,
                        const std::string& name, int m, bool conditional, bool align,
                        bool use_cache, int clusters) {
    KvCache cache;
    RdCurve curve;
    std::vector<BenchRun> runs;
    for (double delta : steps) {
      CompressOptions opt;
      opt.refs = m;
      opt.step = delta;
      opt.conditional = conditional;
      opt.align = align;
      opt.use_cache = use_cache;
      opt.alpha_w0 = 0.0;
      opt.alpha_w1 = 0.0;
      double bits = 0.0, px = 0.0, mse_accum = 0.0, enc_ms = 0.0, dec_ms = 0.0;
      for (const Image& img : images) {
        CompressResult res = compress_image(img, dict, tree, &cache, opt);
        auto t0 = std::chrono::steady_clock::now();
        DecompressResult dec = decompress_image(res.bytes, dict);
        dec_ms += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                      .count() * 1e3;
        enc_ms += res.seconds * 1e3;
        bits += static_cast<double>(res.rate.total_bits);
        px += static_cast<double>(img.width) * img.height;
        for (std::size_t i = 0; i < img.data.size(); ++i) {
          double d = static_cast<double>(img.data[i]) - dec.image.data[i];
          mse_accum += d * d / img.data.size();
        }
      }
      double mean_mse = mse_accum / images.size();
      double mean_psnr = 10.0 * std::log10(255.0 * 255.0 / std::max(mean_mse, 1e-12));
      BenchRun run{name, m, clusters, delta, bits / px, mean_psnr,
                   enc_ms / images.size(), dec_ms / images.size()};
      runs.push_back(run);
      curve.add(run.bpp, run.psnr_db, name);
    }
    std::sort(curve.points.begin(), curve.points.end(),
              [](const RdPoint& a, const RdPoint& b) { return a.rate < b.rate; });
    return std::pair{runs, curve};
  };

  for (int clusters : cluster_sizes) {
    int usable = std::min<int>(clusters, static_cast<int>(patches.size()));
    DictionaryBuildConfig cfg;
    cfg.clusters = static_cast<std::uint32_t>(usable);
    cfg.pca_dim = 64;
    cfg.seed = seed;
    auto t0 = std::chrono::steady_clock::now();
    Dictionary dict = build_dictionary(patches, cfg);
    double build_ms =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() * 1e3;
    BallTree tree = BallTree::build(dict.key_matrix());
    csv << "build,clusters=" << usable << ",0," << usable << ",0,0,0," << build_ms
        << ",0,0\n";

    auto [anchor_runs, anchor_curve] =
        run_config(dict, tree, "no-cond", 3, false, true, true, usable);
    for (const BenchRun& r : anchor_runs)
      csv << "point," << r.config << ',' << r.m << ',' << r.clusters << ',' << r.delta
          << ',' << r.bpp << ',' << r.psnr_db << ',' << r.enc_ms << ',' << r.dec_ms
          << ",0\n";

    struct Toggle {
      std::string name;
      int m;
      bool align;
      bool cache;
    };
    std::vector<Toggle> toggles;
    for (int m = 1; m <= 5; ++m)
      toggles.push_back({"cond-m" + std::to_string(m), m, true, true});
    toggles.push_back({"no-align", 3, false, true});
    toggles.push_back({"no-cache", 3, true, false});

    for (const Toggle& t : toggles) {
      auto [runs, curve] = run_config(dict, tree, t.name, t.m, true, t.align, t.cache, usable);
      double bd = bd_rate(curve, anchor_curve);
      for (const BenchRun& r : runs)
        csv << "point," << r.config << ',' << r.m << ',' << r.clusters << ',' << r.delta
            << ',' << r.bpp << ',' << r.psnr_db << ',' << r.enc_ms << ',' << r.dec_ms
            << ",0\n";
      csv << "summary," << t.name << ',' << t.m << ',' << usable << ",0,0,0,0,0," << bd
          << "\n";
    }
  }
  std::cout << "wrote " << out_csv << "\n";
  return 0;
}

// Procedural corpus for the robustness experiment: textured images whose
// exact patches seed the dictionary, so clean conditioning has real gain.
std::vector<Image> synthetic_corpus(int count, int size, std::uint64_t seed) {
  std::vector<Image> images;
  for (int i = 0; i < count; ++i) {
    Rng rng(splitmix64(seed ^ splitmix64(1000 + i)));
    Image img(size, size, 1);
    double fx = 2.0 * M_PI * (1.0 + rng.uniform() * 3.0) / size;
    double fy = 2.0 * M_PI * (1.0 + rng.uniform() * 3.0) / size;
    double phase = rng.uniform() * 2.0 * M_PI;
    double amp = 30.0 + rng.uniform() * 40.0;
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) {
        double v = 128.0 + amp * std::sin(fx * x + phase) * std::cos(fy * y) +
                   8.0 * rng.normal();
        img.at(x, y, 0) = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
      }
    images.push_back(std::move(img));
  }
  return images;
}

int cmd_verify_theory(const std::string& out_prefix, const std::string& sweep_spec,
                      int trials, std::uint64_t seed, bool skip_robustness) {
  theory::SweepConfig cfg;
  cfg.seed = seed;
  if (trials > 0) cfg.trials = trials;
  if (!sweep_spec.empty()) {
    std::ifstream in(sweep_spec);
    if (!in) throw ParseError("cannot open sweep spec " + sweep_spec);
    nlohmann::json j = nlohmann::json::parse(in);
    cfg.d = j.value("d", cfg.d);
    cfg.r = j.value("r", cfg.r);
    cfg.lambda_s = j.value("lambda_s", cfg.lambda_s);
    cfg.sigma = j.value("sigma", cfg.sigma);
    cfg.delta = j.value("delta", cfg.delta);
    cfg.trials = j.value("trials", cfg.trials);
    if (j.contains("n")) cfg.n = j["n"].get<std::vector<int>>();
    if (j.contains("rho")) cfg.rho = j["rho"].get<std::vector<double>>();
  }

  theory::BoundReport report = theory::verify_bound(cfg);
  write_bound_csv(report, out_prefix + ".csv");

  std::cout << std::fixed << std::setprecision(4);
  std::cout << "fitted_C " << report.fitted_c << "\nviolation_rate "
            << report.overall_violation_rate << "\nratio_rho0 " << report.ratio_rho0
            << "\nmonotone_n " << report.monotone_in_n << "\nmonotone_rho "
            << report.monotone_in_rho << "\n";
  for (const auto& c : report.configs) {
    if (c.skipped)
      std::cout << "config n=" << c.n << " rho=" << c.rho
                << " skipped (effective gap not positive), median_error="
                << c.median_error << "\n";
  }

  bool pr_ok = true;
  nlohmann::json pr_json = nlohmann::json::array();
  if (!skip_robustness) {
    std::vector<Image> corpus = synthetic_corpus(3, 64, seed);
    DictionaryBuildConfig dcfg;
    dcfg.clusters = static_cast<std::uint32_t>(corpus.size());
    dcfg.pca_dim = 16;
    dcfg.seed = seed;
    Dictionary dict = build_dictionary(corpus, dcfg);
    BallTree tree = BallTree::build(dict.key_matrix());

    theory::CodecHandle handle = [&](const Image& img, bool conditional, double step,
                                     double epsilon, std::uint64_t run_seed) {
      CompressOptions opt;
      opt.step = step;
      opt.conditional = conditional;
      if (epsilon > 0.0 || conditional)
        opt.perturb = PerturbSpec{epsilon, run_seed};
      CompressResult res = compress_image(img, dict, tree, nullptr, opt);
      return theory::CodecRun{res.bpp, res.psnr_db};
    };
    theory::PrReport pr = theory::robustness_pr(handle, corpus, {0.0, 0.1, 0.3, 0.5}, 1.0,
                                                {0.5, 1.0, 2.0, 4.0, 8.0}, seed);
    pr_ok = pr.valid && pr.monotone && pr.points.front().pr == 0.0;
    std::cout << "robustness";
    for (const auto& pt : pr.points) {
      std::cout << " eps=" << pt.epsilon << ":PR=" << pt.pr;
      pr_json.push_back({{"epsilon", pt.epsilon}, {"gain_db", pt.gain_db}, {"pr", pt.pr}});
    }
    std::cout << "\npr_monotone " << pr.monotone << "\n";
  }

  nlohmann::json summary = nlohmann::json::parse(bound_report_json(report));
  summary["robustness"] = pr_json;
  std::ofstream js(out_prefix + ".json");
  js << summary.dump(2) << "\n";

  bool pass = report.passed() && pr_ok;
  std::cout << (pass ? "VERIFY-THEORY PASS" : "VERIFY-THEORY FAIL") << "\n";
  return pass ? 0 : 1;
}

}  // namespace

int run(std::vector<std::string> args) {
  CLI::App app{"conditional latent codec"};
  app.require_subcommand(1);
  std::uint64_t seed = master_seed();

  // build-dict
  auto* build = app.add_subcommand("build-dict", "build a feature dictionary from a corpus");
  std::string corpus, out_path = "dict.clcd";
  int clusters = 256, pca_dim = 64, patch = 256, batch = 256, iters = 50;
  build->add_option("corpus", corpus, "directory of .ppm/.pgm images")->required();
  build->add_option("-o,--out", out_path, "output dictionary path");
  build->add_option("--clusters", clusters, "number of dictionary entries");
  build->add_option("--pca-dim", pca_dim, "PCA target dimension");
  build->add_option("--patch", patch, "crop size for corpus patches");
  build->add_option("--seed", seed, "build seed");
  build->add_option("--batch", batch, "k-means mini-batch size");
  build->add_option("--iters", iters, "k-means iterations");

  // compress
  auto* comp = app.add_subcommand("compress", "compress an image against a dictionary");
  std::string comp_in, comp_dict, comp_out = "out.clcb";
  CompressOptions copt;
  bool no_cond = false, no_align = false, no_cache = false;
  comp->add_option("input", comp_in, "input .ppm/.pgm")->required();
  comp->add_option("dict", comp_dict, "dictionary path")->required();
  comp->add_option("-o,--out", comp_out, "output bitstream path");
  comp->add_option("--refs", copt.refs, "number of reference images M");
  comp->add_option("--step", copt.step, "quantization step");
  comp->add_option("--window", copt.window, "match window in blocks (0..3)");
  comp->add_option("--alpha-w0", copt.alpha_w0, "fusion weight bias");
  comp->add_option("--alpha-w1", copt.alpha_w1, "fusion weight score slope");
  comp->add_flag("--no-cond", no_cond, "disable conditioning (alpha = 1)");
  comp->add_flag("--no-align", no_align, "disable offset refinement and gain fit");
  comp->add_flag("--no-cache", no_cache, "disable the KV cache");

  // decompress
  auto* dec = app.add_subcommand("decompress", "decode a bitstream");
  std::string dec_in, dec_dict, dec_out = "out.ppm";
  dec->add_option("bitstream", dec_in, "input .clcb")->required();
  dec->add_option("dict", dec_dict, "dictionary path")->required();
  dec->add_option("-o,--out", dec_out, "output image path");

  // eval
  auto* eval = app.add_subcommand("eval", "per-image bpp/PSNR for (original, bitstream) pairs");
  std::string eval_dict;
  std::vector<std::string> eval_pairs;
  eval->add_option("dict", eval_dict, "dictionary path")->required();
  eval->add_option("pairs", eval_pairs, "original bitstream [original bitstream ...]")
      ->required();

  // bench
  auto* bench = app.add_subcommand("bench", "sweep M, cluster sizes, toggles; CSV output");
  std::string bench_corpus, bench_out = "bench.csv";
  std::vector<int> bench_clusters{8};
  std::vector<double> bench_steps{0.5, 1.0, 2.0, 4.0};
  bench->add_option("corpus", bench_corpus, "directory of images")->required();
  bench->add_option("-o,--out", bench_out, "output CSV");
  bench->add_option("--clusters", bench_clusters, "cluster sizes to sweep");
  bench->add_option("--steps", bench_steps, "quantization steps");
  bench->add_option("--seed", seed, "dictionary seed");

  // verify-theory
  auto* verify = app.add_subcommand("verify-theory", "bound verification and robustness");
  std::string verify_out = "verify_theory", sweep_spec;
  int verify_trials = 0;
  bool skip_robustness = false;
  verify->add_option("--out", verify_out, "output prefix for CSV/JSON");
  verify->add_option("--sweep-spec", sweep_spec, "JSON sweep override");
  verify->add_option("--trials", verify_trials, "trial count override");
  verify->add_option("--seed", seed, "master seed");
  verify->add_flag("--skip-robustness", skip_robustness, "bound sweep only");

  try {
    std::vector<const char*> argv;
    argv.push_back("clc");
    for (const auto& a : args) argv.push_back(a.c_str());
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (build->parsed())
      return cmd_build_dict(corpus, out_path, clusters, pca_dim, patch, seed, batch, iters);
    if (comp->parsed()) {
      copt.conditional = !no_cond;
      copt.align = !no_align;
      copt.use_cache = !no_cache;
      return cmd_compress(comp_in, comp_dict, comp_out, copt);
    }
    if (dec->parsed()) return cmd_decompress(dec_in, dec_dict, dec_out);
    if (eval->parsed()) return cmd_eval(eval_dict, eval_pairs);
    if (bench->parsed()) return cmd_bench(bench_corpus, bench_out, bench_clusters,
                                          bench_steps, seed);
    if (verify->parsed())
      return cmd_verify_theory(verify_out, sweep_spec, verify_trials, seed, skip_robustness);
  } catch (const HashMismatchError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const MalformedBitstreamError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace clc::cli
