// cldice: topology-aware evaluation and losses for tubular segmentation.
//
// Exit codes: 0 success, 2 validation error, 3 IO error, 4 numerical failure.

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "cldice/autodiff.hpp"
#include "cldice/graphmetrics.hpp"
#include "cldice/metrics.hpp"
#include "cldice/morphology.hpp"
#include "cldice/rng.hpp"
#include "cldice/topology.hpp"
#include "cldice/trainer.hpp"
#include "cldice/volume_io.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

using nlohmann::json;
using namespace cldice;

struct NumericalFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

void emit(const json& j, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw VolumeIoError(VolumeIoCode::write_failed, out_path);
  out << j.dump(2) << "\n";
}

json report_to_json(const MetricReport& r) {
  json j{{"dice", r.dice},
         {"accuracy", r.accuracy},
         {"cldice", r.cldice},
         {"betti0_err", r.betti0_err},
         {"betti1_err", r.betti1_err},
         {"betti2_err", r.betti2_err},
         {"euler_err", r.euler_err},
         {"patch_count", r.patch_count}};
  if (r.euler_ratio) j["euler_ratio"] = *r.euler_ratio;
  if (r.smd) j["smd"] = *r.smd;
  if (r.cldice_background) j["cldice_background"] = *r.cldice_background;
  return j;
}

struct EvaluateArgs {
  std::string pred, label, out;
  double thresh = 0.5;
  int patch_size = 0;  // 0: whole volume
  int n_patches = 1;
  std::uint64_t seed = 1;
  bool with_smd = false;
  bool with_background = false;
  bool deterministic = false;
  int jobs = 1;
};

int cmd_evaluate(const EvaluateArgs& a) {
  const BinaryMask pred = as_mask(load_volume(a.pred), a.thresh);
  const BinaryMask label = as_mask(load_volume(a.label), a.thresh);
  require_same_shape(pred.shape(), label.shape());

  // default protocol: 64x64 patches in 2D, 48x48x48 in 3D, clamped to fit
  int patch = a.patch_size;
  if (patch == 0) {
    patch = pred.shape().nd == 2 ? 64 : 48;
    for (int ax = 0; ax < pred.shape().nd; ++ax)
      patch = std::min(patch, pred.shape().d[ax]);
  }
  PatchEvalOptions opt;
  opt.with_smd = a.with_smd;
  opt.with_background = a.with_background;
  opt.jobs = a.jobs;
  const MetricReport rep =
      patch_evaluate(pred, label, patch, a.n_patches, a.seed, opt);

  json j = report_to_json(rep);
  j["provenance"] = {{"pred", a.pred},          {"label", a.label},
                     {"threshold", a.thresh},   {"patch_size", patch},
                     {"n_patches", a.n_patches}, {"seed", a.seed},
                     {"version", kVersion}};
  if (!a.deterministic) j["provenance"]["timestamp"] = timestamp_utc();
  emit(j, a.out);
  return 0;
}

int cmd_skeletonize(const std::string& in, const std::string& mode, int k,
                    const std::string& out) {
  const Volume v = load_volume(in);
  if (mode == "soft") {
    const ScalarField f = as_field(v);
    int kk = k;
    if (kk < 0) kk = std::max(1, max_inscribed_radius(threshold(f, 0.5)));
    save_volume(out, soft_skeleton(f, kk));
  } else if (mode == "thin") {
    save_volume(out, thin_skeletonize(as_mask(v, 0.5)));
  } else {
    throw std::invalid_argument("mode must be soft or thin");
  }
  return 0;
}

int cmd_betti(const std::string& in, const std::string& out) {
  const BinaryMask m = as_mask(load_volume(in), 0.5);
  const BettiTriple b = betti_numbers(m);
  emit(json{{"b0", b.b0}, {"b1", b.b1}, {"b2", b.b2},
            {"euler", euler_characteristic(m)}},
       out);
  return 0;
}

int cmd_certify(const std::string& pred, const std::string& label,
                const std::string& out) {
  const BinaryMask p = as_mask(load_volume(pred), 0.5);
  const BinaryMask l = as_mask(load_volume(label), 0.5);
  const HomotopyCertificate c = homotopy_certificate(p, l);
  emit(json{{"fg_skel_in_pred", c.fg_skel_in_pred},
            {"pred_skel_in_fg", c.pred_skel_in_fg},
            {"bg_skel_in_pred_bg", c.bg_skel_in_pred_bg},
            {"pred_bg_skel_in_bg", c.pred_bg_skel_in_bg},
            {"betti_fg_equal", c.betti_fg_equal},
            {"betti_bg_equal", c.betti_bg_equal},
            {"certified", c.certified}},
       out);
  return 0;
}

int cmd_smd(const std::string& pred, const std::string& label, int n,
            std::uint64_t seed, const std::string& out) {
  const BinaryMask p = as_mask(load_volume(pred), 0.5);
  const BinaryMask l = as_mask(load_volume(label), 0.5);
  require_same_shape(p.shape(), l.shape());
  const SpatialGraph gp = skeleton_to_graph(thin_skeletonize(p));
  const SpatialGraph gl = skeleton_to_graph(thin_skeletonize(l));
  const SmdResult r = streetmover_distance(gp, gl, n, seed);
  emit(json{{"smd", r.value},
            {"mean_distance", r.mean_distance},
            {"empty_mismatch", r.empty_mismatch},
            {"n", n},
            {"seed", seed}},
       out);
  return 0;
}

int cmd_gradcheck(double alpha, int k, int size, double tol, double h,
                  std::uint64_t seed, const std::string& out) {
  Rng rng(seed);
  std::vector<double> data(static_cast<std::size_t>(size) * size);
  for (double& v : data) v = rng.next_unit();
  const ScalarField input(Shape::of2d(size, size), std::move(data));
  const SyntheticSample tube =
      gen_synthetic_tubes(Rng::derive(seed, 7), std::max(size, 16), 1, 1, 1, 0.0);
  const ScalarField label =
      crop(to_field(tube.label), VoxelIndex{0, 0}, Shape::of2d(size, size));

  LossParams params;
  params.alpha = alpha;
  params.k = k;
  const GradCheckReport rep = grad_check(
      [&](Tape& t, int x) {
        return build_combined_loss(t, x, t.leaf(label), params);
      },
      input, h, tol);

  json j{{"max_rel_err", rep.max_rel_err},
         {"checked", rep.checked},
         {"excluded_ties", rep.excluded_ties},
         {"tol", tol},
         {"pass", rep.passed(tol)}};
  emit(j, out);
  if (!rep.passed(tol))
    throw NumericalFailure("gradient check exceeded tolerance");
  return 0;
}

int cmd_train_demo(const std::string& config_path, const std::string& csv_path,
                   const std::string& out) {
  json cfg_json;
  {
    std::ifstream in(config_path);
    if (!in) throw VolumeIoError(VolumeIoCode::open_failed, config_path);
    in >> cfg_json;
  }
  TrainConfig cfg;
  cfg.loss.alpha = cfg_json.value("alpha", 0.5);
  cfg.loss.k = cfg_json.value("k", 2);
  cfg.loss.epsilon = cfg_json.value("epsilon", 1e-6);
  cfg.steps = cfg_json.value("steps", 200);
  cfg.learning_rate = cfg_json.value("learning_rate", 1.0);
  cfg.kernel_size = cfg_json.value("kernel_size", 5);
  cfg.log_every = cfg_json.value("log_every", 10);
  DataConfig data;
  data.size = cfg_json.value("image_size", 40);
  data.n_curves = cfg_json.value("n_curves", 2);
  data.radius_min = cfg_json.value("radius_min", 1);
  data.radius_max = cfg_json.value("radius_max", 2);
  data.noise_sigma = cfg_json.value("noise_sigma", 0.1);
  data.n_train = cfg_json.value("n_train", 2);
  std::vector<std::uint64_t> seeds =
      cfg_json.value("seeds", std::vector<std::uint64_t>{1});

  std::ofstream csv;
  if (!csv_path.empty()) {
    csv.open(csv_path);
    if (!csv) throw VolumeIoError(VolumeIoCode::write_failed, csv_path);
    csv << "step,loss,dice,cldice,b0err,b1err\n";
  }

  json summary{{"version", kVersion}, {"alpha", cfg.loss.alpha}, {"per_seed", json::array()}};
  double mean_cldice = 0.0, mean_b0 = 0.0;
  for (const std::uint64_t seed : seeds) {
    const TrainResult r = run_seed(cfg, data, seed);
    if (csv.is_open()) {
      if (seeds.size() > 1) csv << "# seed=" << seed << "\n";
      for (const auto& row : r.history)
        csv << row.step << "," << row.loss << "," << row.dice << ","
            << row.cldice << "," << row.b0_err << "," << row.b1_err << "\n";
    }
    const auto& last = r.history.back();
    summary["per_seed"].push_back(json{{"seed", seed},
                                       {"final_loss", last.loss},
                                       {"cldice", last.cldice},
                                       {"b0_err", last.b0_err},
                                       {"b1_err", last.b1_err},
                                       {"dice", last.dice}});
    mean_cldice += last.cldice;
    mean_b0 += last.b0_err;
  }
  summary["mean_cldice"] = mean_cldice / seeds.size();
  summary["mean_b0_err"] = mean_b0 / seeds.size();
  emit(summary, out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"topology-aware segmentation measures, losses and demos"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "evaluate prediction vs label");
  evaluate->add_option("pred", ev.pred)->required();
  evaluate->add_option("label", ev.label)->required();
  evaluate->add_option("--threshold", ev.thresh);
  evaluate->add_option("--patch-size", ev.patch_size);
  evaluate->add_option("--n-patches", ev.n_patches);
  evaluate->add_option("--seed", ev.seed);
  evaluate->add_flag("--with-smd", ev.with_smd);
  evaluate->add_flag("--with-background", ev.with_background);
  evaluate->add_flag("--deterministic", ev.deterministic,
                     "omit timestamps for byte-stable reports");
  evaluate->add_option("--jobs", ev.jobs);
  evaluate->add_option("--out", ev.out);

  std::string sk_in, sk_mode = "soft", sk_out;
  int sk_k = -1;
  auto* skel = app.add_subcommand("skeletonize", "write a skeleton volume");
  skel->add_option("input", sk_in)->required();
  skel->add_option("output", sk_out)->required();
  skel->add_option("--mode", sk_mode)->check(CLI::IsMember({"soft", "thin"}));
  skel->add_option("--k", sk_k, "iterations for soft mode (default: auto)");

  std::string bt_in, bt_out;
  auto* betti = app.add_subcommand("betti", "Betti numbers and Euler characteristic");
  betti->add_option("input", bt_in)->required();
  betti->add_option("--out", bt_out);

  std::string ct_pred, ct_label, ct_out;
  auto* certify = app.add_subcommand("certify", "homotopy-equivalence certificate");
  certify->add_option("pred", ct_pred)->required();
  certify->add_option("label", ct_label)->required();
  certify->add_option("--out", ct_out);

  std::string sm_pred, sm_label, sm_out;
  int sm_n = 100;
  std::uint64_t sm_seed = 1;
  auto* smd = app.add_subcommand("smd", "StreetMover distance between skeleton graphs");
  smd->add_option("pred", sm_pred)->required();
  smd->add_option("label", sm_label)->required();
  smd->add_option("--n", sm_n);
  smd->add_option("--seed", sm_seed);
  smd->add_option("--out", sm_out);

  double gc_alpha = 0.5, gc_tol = 1e-4, gc_h = 1e-5;
  int gc_k = 3, gc_size = 10;
  std::uint64_t gc_seed = 1;
  std::string gc_out;
  auto* gradcheck = app.add_subcommand("gradcheck",
                                       "finite-difference check of the loss gradient");
  gradcheck->add_option("--alpha", gc_alpha);
  gradcheck->add_option("--k", gc_k);
  gradcheck->add_option("--size", gc_size);
  gradcheck->add_option("--tol", gc_tol);
  gradcheck->add_option("--fd-step", gc_h, "finite-difference probe step");
  gradcheck->add_option("--seed", gc_seed);
  gradcheck->add_option("--out", gc_out);

  std::string td_config, td_csv, td_out;
  auto* train = app.add_subcommand("train-demo",
                                   "gradient-descent demo on synthetic tubes");
  train->add_option("--config", td_config)->required();
  train->add_option("--csv", td_csv);
  train->add_option("--out", td_out);

  try {
    app.parse(argc, argv);
    if (evaluate->parsed()) return cmd_evaluate(ev);
    if (skel->parsed()) return cmd_skeletonize(sk_in, sk_mode, sk_k, sk_out);
    if (betti->parsed()) return cmd_betti(bt_in, bt_out);
    if (certify->parsed()) return cmd_certify(ct_pred, ct_label, ct_out);
    if (smd->parsed()) return cmd_smd(sm_pred, sm_label, sm_n, sm_seed, sm_out);
    if (gradcheck->parsed())
      return cmd_gradcheck(gc_alpha, gc_k, gc_size, gc_tol, gc_h, gc_seed, gc_out);
    if (train->parsed()) return cmd_train_demo(td_config, td_csv, td_out);
    return 2;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const VolumeIoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
