// curvrec command-line front end.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "curvrec/config.hpp"
#include "curvrec/io.hpp"
#include "curvrec/pipeline.hpp"
#include "curvrec/synth.hpp"

namespace fs = std::filesystem;
using namespace curvrec;

namespace {

enum class LogLevel { quiet, info, debug };

LogLevel log_level() {
  const char* v = std::getenv("CURVREC_LOG");
  if (!v) return LogLevel::info;
  const std::string s = v;
  if (s == "quiet" || s == "error") return LogLevel::quiet;
  if (s == "debug") return LogLevel::debug;
  return LogLevel::info;
}

template <typename... Args>
void log_info(const char* fmt, Args... args) {
  if (log_level() == LogLevel::quiet) return;
  std::fprintf(stderr, fmt, args...);
  std::fputc('\n', stderr);
}

struct ConfigArgs {
  std::string preset;
  std::string file;
  std::vector<std::string> sets;

  void attach(CLI::App* app) {
    app->add_option("--preset", preset, "dataset preset: drive, reca, aerial, cracks, synthetic");
    app->add_option("-c,--config", file, "key=value configuration file")->check(CLI::ExistingFile);
    app->add_option("--set", sets, "override one configuration key (key=value); repeatable")
        ->allow_extra_args(false);
  }

  RunConfig load() const {
    RunConfig cfg;
    if (!preset.empty()) apply_preset(cfg, preset);
    if (!file.empty()) apply_config_file(cfg, file);
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw InvalidParameter("--set expects key=value, got '" + s + "'");
      cfg.set(s.substr(0, eq), s.substr(eq + 1));
    }
    cfg.validate();
    return cfg;
  }
};

bool is_image_file(const fs::path& p) {
  const auto ext = p.extension().string();
  return ext == ".png" || ext == ".PNG" || ext == ".pgm" || ext == ".PGM";
}

std::vector<fs::path> list_images(const std::string& dir) {
  if (dir.empty()) throw InvalidInput("no image directory given");
  if (!fs::is_directory(dir)) throw InvalidInput("'" + dir + "' is not a directory");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && is_image_file(e.path())) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  if (out.empty()) throw InvalidInput("no PNG/PGM images in '" + dir + "'");
  return out;
}

fs::path find_truth(const std::string& gt_dir, const fs::path& image) {
  for (const char* ext : {".png", ".pgm", ".PNG", ".PGM"}) {
    const fs::path p = fs::path(gt_dir) / (image.stem().string() + ext);
    if (fs::exists(p)) return p;
  }
  throw InvalidInput("missing ground truth for '" + image.string() + "' in '" + gt_dir + "'");
}

struct Dataset {
  std::vector<fs::path> paths;
  std::vector<GrayImage> images;
  std::vector<GroundTruthMap> truths;
};

Dataset load_dataset(const std::string& images_dir, const std::string& gt_dir, const RunConfig& cfg, bool need_truth) {
  Dataset d;
  d.paths = list_images(images_dir);
  if (need_truth && gt_dir.empty()) throw InvalidInput("missing ground truth directory");
  for (const auto& p : d.paths) {
    d.images.push_back(io::read_image(p, cfg.channel));
    if (!gt_dir.empty()) {
      d.truths.push_back(io::read_mask(find_truth(gt_dir, p)));
      require_same_shape(d.images.back(), d.truths.back(), p.string().c_str());
    }
  }
  return d;
}

io::TextChunks hash_text(std::uint64_t h) { return {{"config_hash", io::hash_hex(h)}}; }

// Stage inputs must come from the same configuration.
void check_model_hash(const io::ModelFile& m, const RunConfig& cfg, bool force) {
  if (m.config_hash == cfg.hash()) return;
  const std::string msg = "model was trained with config " + io::hash_hex(m.config_hash) + " but the current config is " +
                          io::hash_hex(cfg.hash());
  if (!force) throw InvalidInput(msg + " (use --force to proceed)");
  log_info("warning: %s", msg.c_str());
}

void check_model_pattern(const io::ModelFile& m, const RunConfig& cfg) {
  const std::size_t want = static_cast<std::size_t>(cfg.patch_side) * cfg.thickness;
  if (m.model.ranking.dimension() != want)
    throw InvalidInput("model dimension " + std::to_string(m.model.ranking.dimension()) +
                       " does not match patch_side*thickness = " + std::to_string(want));
}

// --------------------------------------------------------------------------

int cmd_features(const RunConfig& cfg, const std::vector<std::string>& inputs, const std::string& out_dir, bool png) {
  const auto p = cfg.params();
  const auto h = cfg.hash();
  for (const auto& in : inputs) {
    const fs::path path(in);
    const auto phi = compute_features(io::read_image(path, cfg.channel), p);
    const fs::path out = fs::path(out_dir) / (path.stem().string() + ".cfm");
    io::write_cfm1(out, phi, h);
    if (png) io::write_normalized_png(fs::path(out_dir) / (path.stem().string() + ".features.png"), phi, hash_text(h));
    log_info("features: %s -> %s", path.string().c_str(), out.string().c_str());
  }
  return 0;
}

TrainedModel train_on(const RunConfig& cfg, const Dataset& d) {
  const auto p = cfg.params();
  std::vector<FeatureMap> features;
  for (const auto& img : d.images) features.push_back(compute_features(img, p));
  return train_model(features, d.truths, p);
}

void write_model_files(const fs::path& path, const TrainedModel& m, std::uint64_t h) {
  io::write_model(path, m, h);
  io::write_json(fs::path(path.string() + ".json"), io::model_stats_json(m, h));
}

int cmd_train(const RunConfig& cfg, const std::string& out) {
  const auto d = load_dataset(cfg.images, cfg.ground_truth, cfg, true);
  const auto m = train_on(cfg, d);
  write_model_files(out, m, cfg.hash());
  log_info("train: %zu images, %d cutting planes, slack %.3g, rho %.4g -> %s", d.images.size(),
           m.ranking.stats.iterations, m.ranking.stats.slack, m.rho, out.c_str());
  return 0;
}

int cmd_infer(const RunConfig& cfg, const io::ModelFile& mf, const std::vector<std::string>& inputs,
              const std::string& out_dir) {
  const auto p = cfg.params();
  const auto h = cfg.hash();
  const auto b = make_basis_pattern(mf.model.patch_side, mf.model.thickness);
  for (const auto& in : inputs) {
    const fs::path path(in);
    const auto phi = compute_features(io::read_image(path, cfg.channel), p);
    const auto scores = infer_scores(phi, mf.model.ranking, b, mf.model.thetas, p.grid_stride());
    const auto selected = top_rank_binary_map(scores, mf.model.rho);
    const auto pi = synthesize(scores, selected, b);
    const std::string stem = path.stem().string();
    io::write_cfm1(fs::path(out_dir) / (stem + ".pi.cfm"), pi.pi, h);
    io::write_mask_png(fs::path(out_dir) / (stem + ".selected.png"), selected, hash_text(h));
    if (!pi.warning.empty()) log_info("warning: %s: %s", stem.c_str(), pi.warning.c_str());
    log_info("infer: %s, %zu patches synthesized", path.string().c_str(), pi.patches_used);
  }
  return 0;
}

void write_reconstruction(const fs::path& out_dir, const fs::path& image_path, const GrayImage& image,
                          const ImageReconstruction& r, std::uint64_t h) {
  const std::string stem = image_path.stem().string();
  io::write_json(out_dir / (stem + ".json"), io::reconstruction_json(r, h, image_path.filename().string()));
  io::write_overlay_png(out_dir / (stem + ".overlay.png"), image, r, hash_text(h));
  io::write_mask_png(out_dir / (stem + ".mask.png"), r.mask, hash_text(h));
}

int cmd_reconstruct(const RunConfig& cfg, const io::ModelFile& mf, const std::vector<std::string>& inputs,
                    const std::string& out_dir) {
  const auto p = cfg.params();
  const auto h = cfg.hash();
  for (const auto& in : inputs) {
    const fs::path path(in);
    const auto img = io::read_image(path, cfg.channel);
    const auto r = reconstruct_image(compute_features(img, p), mf.model, p);
    write_reconstruction(out_dir, path, img, r, h);
    if (!r.structured.warning.empty()) log_info("warning: %s: %s", path.string().c_str(), r.structured.warning.c_str());
    log_info("reconstruct: %s, %zu paths, %zu pixels", path.string().c_str(), r.reconstruction.paths.size(),
             popcount(r.mask));
  }
  return 0;
}

// --------------------------------------------------------------------------
// eval

struct Prediction {
  std::string name;
  BinaryMap mask;
  std::optional<std::uint64_t> hash;
};

std::string strip_suffixes(std::string stem) {
  for (const char* s : {".mask", ".overlay"})
    if (stem.size() > std::strlen(s) && stem.ends_with(s)) stem.erase(stem.size() - std::strlen(s));
  return stem;
}

Prediction load_prediction(const fs::path& path) {
  Prediction p;
  p.name = strip_suffixes(path.stem().string());
  if (path.extension() == ".json") {
    const auto j = io::read_json(path);
    p.mask = io::mask_from_reconstruction(j, path.string());
    if (j.contains("config_hash")) p.hash = io::parse_hash_hex(j["config_hash"].get<std::string>());
  } else {
    const auto d = io::read_decoded(path);
    p.mask = io::read_mask(path);
    if (const auto it = d.text.find("config_hash"); it != d.text.end()) p.hash = io::parse_hash_hex(it->second);
  }
  return p;
}

struct EvalRow {
  std::string image;
  ImageMetrics m;
  std::string hash;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

int cmd_eval(std::vector<std::string> preds, std::vector<std::string> gts, const std::string& pred_dir,
             const std::string& gt_dir, double tolerance, bool force, const std::string& out) {
  if (!pred_dir.empty() || !gt_dir.empty()) {
    if (pred_dir.empty() || gt_dir.empty()) throw InvalidInput("--pred-dir and --gt-dir go together");
    if (!preds.empty() || !gts.empty()) throw InvalidInput("use either directories or explicit file lists");
    std::map<std::string, fs::path> by_stem;
    for (const auto& e : fs::directory_iterator(pred_dir)) {
      const auto& p = e.path();
      if (!e.is_regular_file()) continue;
      if (p.extension() == ".json")
        by_stem[p.stem().string()] = p;  // a reconstruction JSON wins over a mask of the same name
      else if (is_image_file(p) && p.stem().string().ends_with(".mask"))
        by_stem.emplace(strip_suffixes(p.stem().string()), p);
    }
    for (const auto& g : list_images(gt_dir)) {
      const auto it = by_stem.find(g.stem().string());
      if (it == by_stem.end()) throw InvalidInput("no prediction for ground truth '" + g.string() + "'");
      preds.push_back(it->second.string());
      gts.push_back(g.string());
    }
  }
  if (preds.empty()) throw InvalidInput("empty prediction set");
  if (preds.size() != gts.size())
    throw InvalidInput("pair mismatch: " + std::to_string(preds.size()) + " predictions vs " +
                       std::to_string(gts.size()) + " ground truths");

  std::vector<EvalRow> rows;
  std::set<std::uint64_t> hashes;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto p = load_prediction(preds[i]);
    const auto gt = io::read_mask(gts[i]);
    require_same_shape(p.mask, gt, ("pair " + preds[i] + " / " + gts[i]).c_str());
    if (p.hash) hashes.insert(*p.hash);
    rows.push_back({p.name, evaluate_mask(p.mask, gt, tolerance), p.hash ? io::hash_hex(*p.hash) : ""});
  }
  if (hashes.size() > 1 && !force)
    throw InvalidInput("predictions come from " + std::to_string(hashes.size()) +
                       " different configurations (use --force to compare them anyway)");

  double sp = 0, sr = 0, sf = 0, sq = 0;
  for (const auto& r : rows) {
    sp += r.m.match.precision;
    sr += r.m.match.recall;
    sf += r.m.match.f1;
    sq += r.m.proportion;
  }
  const double n = static_cast<double>(rows.size());
  const std::string mean_hash = hashes.size() == 1 ? io::hash_hex(*hashes.begin()) : hashes.empty() ? "" : "mixed";

  std::string csv = "image,precision,recall,f1,rho_percent,config_hash\n";
  for (const auto& r : rows)
    csv += r.image + "," + fmt(r.m.match.precision) + "," + fmt(r.m.match.recall) + "," + fmt(r.m.match.f1) + "," +
           fmt(r.m.proportion) + "," + r.hash + "\n";
  csv += "mean," + fmt(sp / n) + "," + fmt(sr / n) + "," + fmt(sf / n) + "," + fmt(sq / n) + "," + mean_hash + "\n";
  if (!out.empty()) io::write_bytes(out, std::vector<unsigned char>(csv.begin(), csv.end()));

  std::printf("%-28s %9s %9s %9s %9s\n", "image", "precision", "recall", "f1", "rho%");
  for (const auto& r : rows)
    std::printf("%-28s %9.4f %9.4f %9.4f %9.4f\n", r.image.c_str(), r.m.match.precision, r.m.match.recall,
                r.m.match.f1, r.m.proportion);
  std::printf("%-28s %9.4f %9.4f %9.4f %9.4f\n", "mean", sp / n, sr / n, sf / n, sq / n);
  return 0;
}

// --------------------------------------------------------------------------

int cmd_pipeline(const RunConfig& cfg, const std::string& out_dir) {
  using clock = std::chrono::steady_clock;
  const auto seconds = [](clock::time_point a) { return std::chrono::duration<double>(clock::now() - a).count(); };
  const auto h = cfg.hash();
  const auto p = cfg.params();
  const fs::path out(out_dir);
  nlohmann::ordered_json run;
  run["config_hash"] = io::hash_hex(h);
  run["config"] = cfg.canonical();

  auto t = clock::now();
  const auto train_set = load_dataset(cfg.images, cfg.ground_truth, cfg, true);
  const auto test_set = load_dataset(cfg.test_images, cfg.test_ground_truth, cfg, true);
  std::vector<FeatureMap> train_features, test_features;
  for (const auto& img : train_set.images) train_features.push_back(compute_features(img, p));
  for (const auto& img : test_set.images) test_features.push_back(compute_features(img, p));
  run["timings"]["features"] = seconds(t);

  t = clock::now();
  const auto model = train_model(train_features, train_set.truths, p);
  write_model_files(out / "model.crsv", model, h);
  run["timings"]["train"] = seconds(t);
  log_info("pipeline: trained on %zu images, rho %.4g", train_set.images.size(), model.rho);

  t = clock::now();
  std::vector<std::string> preds, gts;
  for (std::size_t i = 0; i < test_set.images.size(); ++i) {
    const auto r = reconstruct_image(test_features[i], model, p);
    write_reconstruction(out / "reconstructions", test_set.paths[i], test_set.images[i], r, h);
    preds.push_back((out / "reconstructions" / (test_set.paths[i].stem().string() + ".json")).string());
    gts.push_back(find_truth(cfg.test_ground_truth, test_set.paths[i]).string());
  }
  run["timings"]["reconstruct"] = seconds(t);

  t = clock::now();
  cmd_eval(preds, gts, "", "", p.tolerance, false, (out / "metrics.csv").string());
  run["timings"]["eval"] = seconds(t);
  io::write_json(out / "run.json", run);
  return 0;
}

int cmd_synth(const SynthOptions& opt, int count, int train, std::uint64_t seed, const std::string& out_dir) {
  if (count < 1) throw InvalidParameter("--count must be >= 1");
  if (train < 0 || train > count) throw InvalidParameter("--train must lie in [0, count]");
  for (int i = 0; i < count; ++i) {
    const auto s = synthesize_network(opt, seed + static_cast<std::uint64_t>(i));
    const fs::path split = fs::path(out_dir) / (i < train ? "train" : "test");
    char name[32];
    std::snprintf(name, sizeof name, "%03d.png", i);
    io::write_gray_png(split / "images" / name, s.image);
    io::write_mask_png(split / "gt" / name, s.truth);
  }
  log_info("synth: %d images (%d train, %d test) -> %s", count, train, count - train, out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Curvilinear structure reconstruction from structured patch rankings"};
  app.require_subcommand(1);

  ConfigArgs features_cfg, train_cfg, infer_cfg, recon_cfg, pipeline_cfg;
  std::vector<std::string> inputs;
  std::string out, model_path;
  bool png = false, force = false;

  auto* features = app.add_subcommand("features", "compute feature maps (CFM1) for images");
  features_cfg.attach(features);
  features->add_option("images", inputs, "input images")->required();
  features->add_option("-o,--out", out, "output directory")->required();
  features->add_flag("--png", png, "also write normalized 8-bit previews");

  auto* train = app.add_subcommand("train", "sample patches, train the ranking model and calibrate rho");
  train_cfg.attach(train);
  std::string images_dir, gt_dir;
  train->add_option("--images", images_dir, "training image directory (overrides config)");
  train->add_option("--gt", gt_dir, "training ground-truth directory (overrides config)");
  train->add_option("-o,--out", out, "model file")->required();

  auto* infer = app.add_subcommand("infer", "write structured score maps and top-rank selections");
  infer_cfg.attach(infer);
  infer->add_option("images", inputs, "input images")->required();
  infer->add_option("-m,--model", model_path, "model file")->required()->check(CLI::ExistingFile);
  infer->add_option("-o,--out", out, "output directory")->required();
  infer->add_flag("--force", force, "accept a model trained under a different configuration");

  auto* recon = app.add_subcommand("reconstruct", "extract geodesic paths; write JSON, overlay and mask");
  recon_cfg.attach(recon);
  recon->add_option("images", inputs, "input images")->required();
  recon->add_option("-m,--model", model_path, "model file")->required()->check(CLI::ExistingFile);
  recon->add_option("-o,--out", out, "output directory")->required();
  recon->add_flag("--force", force, "accept a model trained under a different configuration");

  auto* eval = app.add_subcommand("eval", "tolerant precision / recall / F1 and pixel proportion");
  std::vector<std::string> preds, gts;
  std::string pred_dir, eval_gt_dir;
  double tolerance = 5;
  eval->add_option("--pred", preds, "prediction files (reconstruction JSON or mask PNG/PGM)");
  eval->add_option("--gt", gts, "ground-truth masks, paired with --pred by position");
  eval->add_option("--pred-dir", pred_dir, "directory of predictions, paired with --gt-dir by name");
  eval->add_option("--gt-dir", eval_gt_dir, "directory of ground-truth masks");
  eval->add_option("-t,--tolerance", tolerance, "match radius in pixels")->check(CLI::NonNegativeNumber);
  eval->add_option("-o,--out", out, "metrics CSV");
  eval->add_flag("--force", force, "allow predictions from different configurations");

  auto* pipeline = app.add_subcommand("pipeline", "features, train, reconstruct and eval in one run");
  pipeline_cfg.attach(pipeline);
  std::string test_images_dir, test_gt_dir;
  pipeline->add_option("--images", images_dir, "training image directory");
  pipeline->add_option("--gt", gt_dir, "training ground-truth directory");
  pipeline->add_option("--test-images", test_images_dir, "test image directory");
  pipeline->add_option("--test-gt", test_gt_dir, "test ground-truth directory");
  pipeline->add_option("-o,--out", out, "output directory")->required();

  auto* synth = app.add_subcommand("synth", "generate a labeled synthetic line-network dataset");
  SynthOptions so;
  int count = 8, train_count = -1;
  std::uint64_t seed = 1;
  synth->add_option("-o,--out", out, "output directory")->required();
  synth->add_option("-n,--count", count, "number of images");
  synth->add_option("--train", train_count, "images in the train split (default: half)");
  synth->add_option("--seed", seed, "first image seed");
  synth->add_option("--width", so.width, "image width");
  synth->add_option("--height", so.height, "image height");
  synth->add_option("--thickness", so.thickness, "structure thickness in pixels");
  synth->add_option("--noise", so.noise, "Gaussian noise standard deviation");
  synth->add_option("--branches", so.branches, "branches per tree");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    auto with_dirs = [&](ConfigArgs& c) {
      auto cfg = c.load();
      if (!images_dir.empty()) cfg.images = images_dir;
      if (!gt_dir.empty()) cfg.ground_truth = gt_dir;
      if (!test_images_dir.empty()) cfg.test_images = test_images_dir;
      if (!test_gt_dir.empty()) cfg.test_ground_truth = test_gt_dir;
      cfg.validate();
      return cfg;
    };
    if (*features) return cmd_features(features_cfg.load(), inputs, out, png);
    if (*train) return cmd_train(with_dirs(train_cfg), out);
    if (*infer || *recon) {
      const auto cfg = (*infer ? infer_cfg : recon_cfg).load();
      const auto mf = io::read_model(model_path);
      check_model_pattern(mf, cfg);
      check_model_hash(mf, cfg, force);
      return *infer ? cmd_infer(cfg, mf, inputs, out) : cmd_reconstruct(cfg, mf, inputs, out);
    }
    if (*eval) return cmd_eval(preds, gts, pred_dir, eval_gt_dir, tolerance, force, out);
    if (*pipeline) return cmd_pipeline(with_dirs(pipeline_cfg), out);
    if (*synth) return cmd_synth(so, count, train_count < 0 ? count / 2 : train_count, seed, out);
  } catch (const InvalidInput& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const InvalidParameter& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 3;
  }
  return 2;
}
