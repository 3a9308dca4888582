// charcol: train, ensemble, and evaluate max-pooling convolutional columns
// on isolated-character images.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "charcol/arch.hpp"
#include "charcol/dataset.hpp"
#include "charcol/ensemble.hpp"
#include "charcol/imageprep.hpp"
#include "charcol/synth.hpp"
#include "charcol/trainer.hpp"

namespace fs = std::filesystem;
using namespace charcol;

namespace {

std::vector<std::string> split_csv(const std::string& csv) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : csv) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::string layer_name(const LayerSpec& layer) {
  if (const auto* c = std::get_if<ConvLayer>(&layer))
    return "conv " + std::to_string(c->maps) + "C" + std::to_string(c->kernel);
  if (const auto* p = std::get_if<MaxPoolLayer>(&layer))
    return "maxpool MP" + std::to_string(p->pool);
  return "full " + std::to_string(std::get<FullLayer>(layer).neurons) + "N";
}

int cmd_parse_arch(const std::string& arch, bool as_json) {
  const auto spec = parse_arch(arch);
  const auto plan = infer_shapes(spec);

  if (as_json) {
    nlohmann::json j;
    j["arch"] = render_arch(spec);
    if (spec.tag) j["tag"] = *spec.tag;
    j["input"] = {1, spec.input_h, spec.input_w};
    nlohmann::json layers = nlohmann::json::array();
    for (std::size_t i = 0; i < plan.layers.size(); ++i) {
      const auto& s = plan.layers[i];
      layers.push_back({{"layer", layer_name(spec.layers[i])},
                        {"maps", s.maps},
                        {"h", s.h},
                        {"w", s.w},
                        {"params", s.params},
                        {"madds", s.madds}});
    }
    j["layers"] = layers;
    j["total_params"] = plan.total_params;
    j["total_madds"] = plan.total_madds;
    std::cout << j.dump(2) << "\n";
    return 0;
  }

  std::cout << "arch: " << render_arch(spec) << "\n";
  std::cout << "  input                1x" << spec.input_h << "x" << spec.input_w << "\n";
  std::ostringstream trace;
  trace << "1x" << spec.input_h << "x" << spec.input_w;
  for (std::size_t i = 0; i < plan.layers.size(); ++i) {
    const auto& s = plan.layers[i];
    std::ostringstream shape;
    if (std::holds_alternative<FullLayer>(spec.layers[i]))
      shape << s.maps;
    else
      shape << s.maps << "x" << s.h << "x" << s.w;
    std::cout << "  " << std::left << std::setw(20) << layer_name(spec.layers[i])
              << " " << std::setw(12) << shape.str() << " params=" << s.params
              << " madds=" << s.madds << "\n";
    trace << " -> " << shape.str();
  }
  std::cout << "trace: " << trace.str() << "\n";
  std::cout << "total params: " << plan.total_params << "\n";
  std::cout << "total madds: " << plan.total_madds << "\n";
  return 0;
}

PreprocessConfig make_config(const std::string& order, int box, int canvas, int fill) {
  PreprocessConfig cfg;
  cfg.order = prep_order_from_string(order);
  cfg.box = box;
  cfg.canvas = canvas;
  if (fill < 0 || fill > 255) throw InvalidArgument("fill must be in 0..255");
  cfg.fill = static_cast<std::uint8_t>(fill);
  validate(cfg);
  return cfg;
}

int cmd_preprocess(const std::string& in_path, const std::string& out_path,
                   const PreprocessConfig& cfg) {
  const GrayImage img = read_pgm(in_path);
  write_pgm(preprocess(img, cfg), out_path);
  std::cout << "preprocessed " << in_path << " (" << img.width << "x" << img.height
            << ") -> " << out_path << " (" << cfg.canvas << "x" << cfg.canvas
            << ", order " << to_string(cfg.order) << ")\n";
  return 0;
}

std::vector<GrayImage> load_pgm_dir(const std::string& dir) {
  std::vector<fs::path> paths;
  if (!fs::is_directory(dir)) throw DataError(dir + ": not a directory");
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".pgm")
      paths.push_back(entry.path());
  std::sort(paths.begin(), paths.end());
  std::vector<GrayImage> out;
  for (const auto& p : paths) out.push_back(read_pgm(p.string()));
  if (out.empty()) throw DataError(dir + ": no .pgm files found");
  return out;
}

int cmd_skew_report(const std::string& dir, const PreprocessConfig& a,
                    const PreprocessConfig& b, const std::string& json_path) {
  const auto corpus = load_pgm_dir(dir);
  const auto report = compare_pipelines(corpus, a, b);
  std::cout << "images=" << report.count << "\n";
  std::cout << "order_a=" << to_string(a.order) << "\n";
  std::cout << "order_b=" << to_string(b.order) << "\n";
  std::cout << "mean_abs_diff=" << fmt6(report.mean_abs) << "\n";
  std::cout << "max_abs_diff=" << fmt6(report.max_abs) << "\n";
  std::cout << "identical=" << report.identical << "\n";
  if (!json_path.empty()) {
    nlohmann::json j;
    j["images"] = report.count;
    j["order_a"] = to_string(a.order);
    j["order_b"] = to_string(b.order);
    j["mean_abs_diff"] = report.mean_abs;
    j["max_abs_diff"] = report.max_abs;
    j["identical"] = report.identical;
    j["per_image_mean_abs"] = report.per_image_mean_abs;
    std::ofstream out(json_path);
    if (!out) throw DataError(json_path + ": cannot open for writing");
    out << j.dump(2) << "\n";
  }
  return 0;
}

int cmd_synth_data(const std::string& out_path, int classes, int per_class, int writers,
                   std::uint64_t seed) {
  const auto ds = synth_glyphs(classes, per_class, writers, seed);
  write_container(ds, out_path);
  std::cout << "wrote " << ds.samples.size() << " samples (" << classes << " classes, "
            << writers << " writers, seed " << seed << ") to " << out_path << "\n";
  return 0;
}

int cmd_gnt_convert(const std::string& in_path, const std::string& out_path,
                    const std::string& table_path, int classes, bool skip_unknown,
                    std::uint32_t writer) {
  const auto table = read_code_table(table_path);
  std::ifstream in(in_path, std::ios::binary);
  if (!in) throw DataError(in_path + ": cannot open");
  const auto samples = read_writer_stream(
      in, table, skip_unknown ? UnknownCode::Skip : UnknownCode::Error, writer, in_path);
  Dataset ds;
  ds.class_count = static_cast<std::uint32_t>(classes);
  ds.samples = samples;
  write_container(ds, out_path);
  std::cout << "converted " << samples.size() << " records from " << in_path << " to "
            << out_path << "\n";
  return 0;
}

Dataset apply_preprocess(Dataset ds, const std::string& order, int box, int canvas,
                         int fill) {
  if (order == "none") return ds;
  const auto cfg = make_config(order, box, canvas, fill);
  for (auto& s : ds.samples) s.image = preprocess(s.image, cfg);
  return ds;
}

int run_self_test(double tol) {
  const auto spec = parse_arch("8x8-2C3-MP2-4N-3N");
  const auto col = init_column(spec, 1);
  std::mt19937_64 rng(1);
  Tensor input({1, 8, 8});
  for (auto& v : input.data)
    v = static_cast<float>((rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0);
  const double err = grad_check(col, input, 0);
  std::cout << "self-test gradient error: " << fmt6(err) << " (tolerance " << fmt6(tol)
            << ")\n";
  if (!(err < tol))
    throw NumericError("gradient self-test failed: " + fmt6(err) + " >= " + fmt6(tol));
  return 0;
}

int cmd_train(const std::string& data_path, const std::string& out_path,
              const std::string& arch, std::uint64_t seed, bool seed_given,
              const Hyperparams& hp, const std::string& val_writers_csv,
              const std::string& pre_order, int box, int canvas, int fill,
              const std::string& log_path, const std::string& checkpoint_dir,
              bool self_test, double self_test_tol) {
  if (self_test) run_self_test(self_test_tol);

  const auto spec = parse_arch(arch);
  if (!seed_given && spec.tag) {
    try {
      seed = std::stoull(*spec.tag);
    } catch (const std::exception&) {
      throw InvalidArgument("architecture tag '" + *spec.tag + "' is not usable as a seed");
    }
  }

  Dataset all = apply_preprocess(read_container(data_path), pre_order, box, canvas, fill);

  Dataset train_set, val_set;
  if (!val_writers_csv.empty()) {
    std::set<std::uint32_t> val_writers, train_writers;
    for (const auto& tok : split_csv(val_writers_csv))
      val_writers.insert(static_cast<std::uint32_t>(std::stoul(tok)));
    for (const auto& s : all.samples)
      if (!val_writers.count(s.writer)) train_writers.insert(s.writer);
    auto split = split_by_writer(all, train_writers, val_writers);
    train_set = std::move(split.train);
    val_set = std::move(split.val);
    std::cout << "split: " << train_set.samples.size() << " train / "
              << val_set.samples.size() << " val (dropped " << split.dropped << ")\n";
  } else {
    train_set = std::move(all);
    val_set.class_count = train_set.class_count;
  }

  auto result = train_column(spec, train_set, val_set, hp, seed);
  save_column(result.column, out_path);

  if (!checkpoint_dir.empty()) {
    fs::create_directories(checkpoint_dir);
    const auto base = fs::path(out_path).filename().string();
    save_column(result.column,
                (fs::path(checkpoint_dir) / (base + ".e" + std::to_string(
                     result.log.best_epoch >= 0 ? result.log.best_epoch : hp.epochs - 1)))
                    .string());
  }
  if (!log_path.empty()) {
    std::ofstream log(log_path);
    if (!log) throw DataError(log_path + ": cannot open for writing");
    log << result.log.render();
  }
  std::cout << result.log.render();
  std::cout << "saved column (seed " << seed << ") to " << out_path << "\n";
  return 0;
}

struct LoadedEnsemble {
  std::vector<Column> columns;
  EnsembleSpec spec;
};

LoadedEnsemble load_columns(const std::string& csv) {
  LoadedEnsemble e;
  for (const auto& path : split_csv(csv)) {
    e.columns.push_back(load_column(path));
    e.spec.member_ids.push_back(path);
  }
  if (e.columns.empty()) throw InvalidArgument("no column files given");
  return e;
}

std::string k_row_label(int k) {
  if (k == 1) return "First";
  return "Best " + std::to_string(k);
}

void print_report_rows(const EvalReport& report) {
  std::cout << "n=" << report.n_samples << " classes=" << report.class_count
            << " members=" << report.member_ids.size() << "\n";
  for (const auto& [k, errors] : report.topk_error_counts) {
    std::cout << std::left << std::setw(8) << k_row_label(k)
              << fmt6(report.topk_error(k) * 100.0) << "%  (" << errors << "/"
              << report.n_samples << ")\n";
  }
}

int cmd_eval(const std::string& data_path, const std::string& columns_csv,
             const std::string& ks_csv, const std::string& pre_order, int box, int canvas,
             int fill, const std::string& report_path, const std::string& json_path,
             bool timing, int threads) {
  auto ensemble = load_columns(columns_csv);
  const Dataset ds =
      apply_preprocess(read_container(data_path), pre_order, box, canvas, fill);
  std::vector<int> ks;
  for (const auto& tok : split_csv(ks_csv)) ks.push_back(std::stoi(tok));

  const auto report = evaluate(ensemble.columns, ensemble.spec, ds, ks, threads);
  print_report_rows(report);
  if (timing) {
    std::cout << "mean_latency_ms=" << fmt6(report.mean_latency_ms) << "\n";
    std::cout << "additivity_ratio=" << fmt6(latency_breakdown(report).ratio) << "\n";
  }
  if (!report_path.empty()) {
    std::ofstream out(report_path);
    if (!out) throw DataError(report_path + ": cannot open for writing");
    out << render_report_kv(report, timing);
  }
  if (!json_path.empty()) {
    std::ofstream out(json_path);
    if (!out) throw DataError(json_path + ": cannot open for writing");
    out << render_report_json(report, timing);
  }
  return 0;
}

int cmd_bench(const std::string& data_path, const std::string& columns_csv,
              const std::string& pre_order, int box, int canvas, int fill, int warmup,
              int threads) {
  auto ensemble = load_columns(columns_csv);
  const Dataset ds =
      apply_preprocess(read_container(data_path), pre_order, box, canvas, fill);

  const std::size_t warm_n = std::min<std::size_t>(warmup, ds.samples.size());
  for (std::size_t i = 0; i < warm_n; ++i) {
    const auto input = normalize_for_net(ds.samples[i].image);
    for (const auto& col : ensemble.columns) (void)forward_column(col, input);
  }

  const auto report = evaluate(ensemble.columns, ensemble.spec, ds, {1}, threads);
  const auto add = latency_breakdown(report);
  std::cout << "samples=" << report.n_samples << "\n";
  for (std::size_t i = 0; i < report.member_latency_ms.size(); ++i)
    std::cout << "member_" << i << "_ms_per_char=" << fmt6(report.member_latency_ms[i])
              << "  (" << report.member_ids[i] << ")\n";
  std::cout << "ensemble_ms_per_char=" << fmt6(add.ensemble_ms) << "\n";
  std::cout << "member_sum_ms_per_char=" << fmt6(add.member_sum_ms) << "\n";
  std::cout << "additivity_ratio=" << fmt6(add.ratio) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"max-pooling convolutional columns for isolated-character images"};
  app.require_subcommand(1);

  // parse-arch
  std::string arch;
  bool as_json = false;
  auto* pa = app.add_subcommand("parse-arch", "inspect an architecture string");
  pa->add_option("arch", arch, "architecture string, e.g. 48x48-100C3-MP2-500N-10N")
      ->required();
  pa->add_flag("--json", as_json, "emit machine-readable JSON");

  // shared preprocessing flags
  std::string order = "contrast-scale", order_b = "scale-contrast";
  int box = 40, canvas = 48, fill = 255;

  // preprocess
  std::string in_path, out_path;
  auto* pp = app.add_subcommand("preprocess", "preprocess one PGM image");
  pp->add_option("input", in_path, "input PGM (binary P5)")->required();
  pp->add_option("output", out_path, "output PGM")->required();
  pp->add_option("--order", order, "contrast-scale or scale-contrast");
  pp->add_option("--box", box, "glyph box size (default 40)");
  pp->add_option("--canvas", canvas, "canvas size (default 48)");
  pp->add_option("--fill", fill, "background fill 0..255 (default 255)");

  // skew-report
  std::string corpus_dir, json_path;
  auto* sk = app.add_subcommand("skew-report", "compare two pipeline orders over a corpus");
  sk->add_option("corpus", corpus_dir, "directory of PGM images")->required();
  sk->add_option("--order-a", order, "first pipeline order");
  sk->add_option("--order-b", order_b, "second pipeline order");
  sk->add_option("--box", box, "glyph box size");
  sk->add_option("--canvas", canvas, "canvas size");
  sk->add_option("--fill", fill, "background fill");
  sk->add_option("--json", json_path, "also write a JSON report here");

  // synth-data
  std::string data_path;
  int classes = 20, per_class = 250, writers = 10;
  std::uint64_t seed = 1;
  auto* sy = app.add_subcommand("synth-data", "generate a synthetic glyph dataset");
  sy->add_option("output", data_path, "output dataset container")->required();
  sy->add_option("--classes", classes, "number of classes");
  sy->add_option("--per-class", per_class, "samples per class");
  sy->add_option("--writers", writers, "number of synthetic writers");
  sy->add_option("--seed", seed, "generator seed");

  // gnt-convert
  std::string table_path;
  bool skip_unknown = false;
  std::uint32_t stream_writer = 0;
  auto* gc = app.add_subcommand("gnt-convert",
                                "convert a writer sample stream to a dataset container");
  gc->add_option("input", in_path, "binary record-per-character stream")->required();
  gc->add_option("output", out_path, "output dataset container")->required();
  gc->add_option("--table", table_path, "code-to-class table (hexcode index lines)")
      ->required();
  gc->add_option("--classes", classes, "dataset class count")->required();
  gc->add_flag("--skip-unknown", skip_unknown, "skip records with unmapped codes");
  gc->add_option("--writer", stream_writer, "writer id recorded for this stream");

  // train
  std::string col_path, val_writers_csv, log_path, checkpoint_dir;
  Hyperparams hp;
  bool self_test = false, no_deform = false;
  double self_test_tol = 1e-4;
  auto* tr = app.add_subcommand("train", "train one column");
  tr->add_option("data", data_path, "training dataset container")->required();
  tr->add_option("output", col_path, "output column file")->required();
  tr->add_option("--arch", arch, "architecture string")->required();
  auto* seed_opt = tr->add_option("--seed", seed,
                                  "training seed (default: the arch tag, else 1)");
  tr->add_option("--epochs", hp.epochs, "training epochs");
  tr->add_option("--lr0", hp.lr0, "initial learning rate");
  tr->add_option("--lr-decay", hp.lr_decay, "per-epoch learning-rate factor");
  tr->add_option("--eval-every", hp.eval_every, "epochs between validation passes");
  tr->add_option("--val-writers", val_writers_csv, "comma-separated writer ids held out");
  tr->add_option("--pre", order, "contrast-scale, scale-contrast, or none");
  tr->add_option("--box", box, "glyph box size");
  tr->add_option("--canvas", canvas, "canvas size");
  tr->add_option("--fill", fill, "background fill");
  tr->add_flag("--no-deform", no_deform, "disable training deformations");
  tr->add_option("--max-translate", hp.deform.max_translate, "deformation translate, px");
  tr->add_option("--max-rotate", hp.deform.max_rotate, "deformation rotation, degrees");
  tr->add_option("--scale-min", hp.deform.scale_min, "deformation scale minimum");
  tr->add_option("--scale-max", hp.deform.scale_max, "deformation scale maximum");
  tr->add_option("--log", log_path, "write the epoch log here");
  tr->add_option("--checkpoints", checkpoint_dir, "directory for best-epoch checkpoint");
  tr->add_flag("--self-test", self_test, "run the gradient self-test before training");
  tr->add_option("--self-test-tol", self_test_tol, "gradient self-test threshold");

  // eval
  std::string columns_csv, ks_csv = "1,10", report_path;
  bool timing = false;
  int threads = 1;
  auto* ev = app.add_subcommand("eval", "evaluate an ensemble of columns");
  ev->add_option("data", data_path, "evaluation dataset container")->required();
  ev->add_option("columns", columns_csv, "comma-separated column files")->required();
  ev->add_option("--ks", ks_csv, "comma-separated k values (default 1,10)");
  ev->add_option("--pre", order, "contrast-scale, scale-contrast, or none");
  ev->add_option("--box", box, "glyph box size");
  ev->add_option("--canvas", canvas, "canvas size");
  ev->add_option("--fill", fill, "background fill");
  ev->add_option("--report", report_path, "write a key=value report here");
  ev->add_option("--json", json_path, "write a JSON report here");
  ev->add_flag("--timing", timing, "include measured latencies in reports");
  ev->add_option("--threads", threads, "worker threads (results are thread-invariant)");

  // bench
  int warmup = 16;
  auto* be = app.add_subcommand("bench", "measure ms/character with warm-up");
  be->add_option("data", data_path, "dataset container")->required();
  be->add_option("columns", columns_csv, "comma-separated column files")->required();
  be->add_option("--pre", order, "contrast-scale, scale-contrast, or none");
  be->add_option("--box", box, "glyph box size");
  be->add_option("--canvas", canvas, "canvas size");
  be->add_option("--fill", fill, "background fill");
  be->add_option("--warmup", warmup, "warm-up samples before measuring");
  be->add_option("--threads", threads, "worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (app.got_subcommand(pa)) return cmd_parse_arch(arch, as_json);
    if (app.got_subcommand(pp))
      return cmd_preprocess(in_path, out_path, make_config(order, box, canvas, fill));
    if (app.got_subcommand(sk))
      return cmd_skew_report(corpus_dir, make_config(order, box, canvas, fill),
                             make_config(order_b, box, canvas, fill), json_path);
    if (app.got_subcommand(sy))
      return cmd_synth_data(data_path, classes, per_class, writers, seed);
    if (app.got_subcommand(gc))
      return cmd_gnt_convert(in_path, out_path, table_path, classes, skip_unknown,
                             stream_writer);
    if (app.got_subcommand(tr)) {
      hp.deform.enabled = !no_deform;
      hp.deform.fill = static_cast<std::uint8_t>(fill);
      return cmd_train(data_path, col_path, arch, seed, seed_opt->count() > 0, hp,
                       val_writers_csv, order, box, canvas, fill, log_path,
                       checkpoint_dir, self_test, self_test_tol);
    }
    if (app.got_subcommand(ev))
      return cmd_eval(data_path, columns_csv, ks_csv, order, box, canvas, fill,
                      report_path, json_path, timing, threads);
    if (app.got_subcommand(be))
      return cmd_bench(data_path, columns_csv, order, box, canvas, fill, warmup, threads);
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {  // parse, shape, invalid-argument
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
