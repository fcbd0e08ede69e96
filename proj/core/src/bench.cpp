#include "pgnn/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "json_util.hpp"
#include "pgnn/errors.hpp"
#include "pgnn/hash.hpp"

namespace fs = std::filesystem;

namespace pgnn {

namespace {

std::string g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

MetricStats stats(const std::vector<double>& v) {
  MetricStats s;
  if (v.empty()) return s;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  out.close();
  if (!out) throw IoError("write failed: " + path.string());
}

struct Pool {
  nn::Tensor<float> train_images;
  std::vector<double> train_labels;
  nn::Tensor<float> test_images;
  std::vector<double> test_labels;
};

Pool make_pool(const BenchConfig& config, int rep, std::string& hash) {
  const std::uint64_t seed = rep_seed(config.base_seed, rep);
  GeneratorConfig gen = config.generator;
  gen.save_fields = false;
  auto samples = generate_samples(gen, seed, config.pool_size());
  if (config.random_labels) {
    Rng rng(mix_seed(seed, 0x6e756c6c));
    for (auto& s : samples) s.y_noisy = uniform(rng, 0.0, 1.0);
  }
  std::vector<SampleRecord> labels_only;
  for (const auto& s : samples) labels_only.push_back({s.sample_id, {}, std::nullopt, s.y_clean, s.y_noisy});
  hash = sha256_hex(format_labels_csv(labels_only));

  const int n_train = config.pool_size() - config.test_size;
  std::vector<const RgbImage*> train_ptrs, test_ptrs;
  Pool pool;
  for (int i = 0; i < config.pool_size(); ++i) {
    const auto& s = samples[static_cast<std::size_t>(i)];
    if (i < n_train) {
      train_ptrs.push_back(&s.image);
      pool.train_labels.push_back(s.y_noisy);
    } else {
      test_ptrs.push_back(&s.image);
      pool.test_labels.push_back(s.y_noisy);
    }
  }
  pool.train_images = images_to_tensor(std::span<const RgbImage* const>(train_ptrs));
  pool.test_images = images_to_tensor(std::span<const RgbImage* const>(test_ptrs));
  return pool;
}

std::vector<BenchRow> run_cell(const BenchConfig& config, const Pool& pool, int rep, int size) {
  const std::uint64_t cell_seed = mix_seed(rep_seed(config.base_seed, rep), static_cast<std::uint64_t>(size));
  const Split split = bench_split(pool.train_labels, size, cell_seed);
  const nn::Tensor<float> z = pool.train_images.gather(split.train);
  std::vector<double> y;
  for (int i : split.train) y.push_back(pool.train_labels[static_cast<std::size_t>(i)]);

  TrainConfig tc = config.train;
  tc.seed = cell_seed;
  RegressorConfig rc;
  rc.variant = config.variant;

  std::vector<BenchRow> rows;
  {
    auto direct = train_regressor(z, y, pool.test_images, pool.test_labels, tc, rc);
    rows.push_back({"direct", size, rep, direct.windowed});
  }
  {
    auto inverse = train_inverse(z, tc);
    const nn::Tensor<float> x_train = apply_inverse(inverse.model, z);
    const nn::Tensor<float> x_test = apply_inverse(inverse.model, pool.test_images);
    auto pgnn = train_regressor(x_train, y, x_test, pool.test_labels, tc, rc);
    rows.push_back({"pgnn", size, rep, pgnn.windowed});
  }
  return rows;
}

}  // namespace

void BenchConfig::validate() const {
  if (train_sizes.empty()) throw ParameterError("at least one train size is required");
  for (int s : train_sizes) {
    if (s < 1) throw ParameterError("train sizes must be positive");
  }
  std::vector<int> sorted = train_sizes;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) throw ParameterError("duplicate train size");
  if (test_size < 1) throw ParameterError("test size must be positive");
  if (reps < 1) throw ParameterError("reps must be >= 1");
  if (jobs < 1) throw ParameterError("jobs must be >= 1");
  generator.validate();
  train.validate();
}

int BenchConfig::pool_size() const {
  return *std::max_element(train_sizes.begin(), train_sizes.end()) + test_size;
}

std::uint64_t rep_seed(std::uint64_t base_seed, int rep) {
  return mix_seed(mix_seed(base_seed, 0x62656e6368ULL), static_cast<std::uint64_t>(rep));
}

Split bench_split(std::span<const double> portion_labels, int train_size, std::uint64_t seed) {
  const int n = static_cast<int>(portion_labels.size());
  if (train_size > n) throw ParameterError("train size exceeds the training portion");
  if (train_size == n) {
    Split all;
    all.train.resize(static_cast<std::size_t>(n));
    std::iota(all.train.begin(), all.train.end(), 0);
    return all;
  }
  return stratified_split(portion_labels, train_size, seed);
}

BenchReport run_monte_carlo(const BenchConfig& config, const BenchLog& log) {
  config.validate();
  std::vector<int> sizes = config.train_sizes;
  std::sort(sizes.begin(), sizes.end());

  BenchReport report;
  report.pool_hashes.resize(static_cast<std::size_t>(config.reps));
  std::vector<Pool> pools(static_cast<std::size_t>(config.reps));
  for (int rep = 0; rep < config.reps; ++rep) {
    pools[static_cast<std::size_t>(rep)] = make_pool(config, rep, report.pool_hashes[static_cast<std::size_t>(rep)]);
  }

  struct Cell {
    int rep;
    int size;
    std::vector<BenchRow> rows;
    std::exception_ptr error;
  };
  std::vector<Cell> cells;
  for (int rep = 0; rep < config.reps; ++rep) {
    for (int size : sizes) cells.push_back({rep, size, {}, nullptr});
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t k = next++; k < cells.size() && !failed; k = next++) {
      Cell& c = cells[k];
      try {
        c.rows = run_cell(config, pools[static_cast<std::size_t>(c.rep)], c.rep, c.size);
        if (log) {
          std::lock_guard lock(log_mutex);
          std::string msg = "rep " + std::to_string(c.rep) + " size " + std::to_string(c.size);
          for (const auto& r : c.rows) {
            msg += "  " + r.model + " rmse=" + g9(r.metrics.rmse) +
                   " r2=" + (r.metrics.r2 ? g9(*r.metrics.r2) : std::string("n/a"));
          }
          log(msg);
        }
      } catch (...) {
        c.error = std::current_exception();
        failed = true;
      }
    }
  };
  const int jobs = std::min<int>(config.jobs, static_cast<int>(cells.size()));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int t = 0; t < jobs; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }

  for (const auto& c : cells) {
    if (c.error) {
      try {
        std::rethrow_exception(c.error);
      } catch (const std::exception& e) {
        throw Error("rep " + std::to_string(c.rep) + ", train size " + std::to_string(c.size) + ": " + e.what());
      }
    }
  }
  for (auto& c : cells) report.rows.insert(report.rows.end(), c.rows.begin(), c.rows.end());
  return report;
}

std::vector<SummaryRow> summarize(const BenchReport& report) {
  if (report.rows.empty()) throw ContractError("cannot summarize an empty report");
  std::map<std::pair<std::string, int>, std::vector<const BenchRow*>> groups;
  for (const auto& r : report.rows) groups[{r.model, r.train_size}].push_back(&r);
  std::vector<SummaryRow> out;
  for (const auto& [key, rows] : groups) {
    SummaryRow s;
    s.model = key.first;
    s.train_size = key.second;
    s.reps = static_cast<int>(rows.size());
    std::vector<double> rmse, mae, r2, se;
    for (const BenchRow* r : rows) {
      rmse.push_back(r->metrics.rmse);
      mae.push_back(r->metrics.mae);
      se.push_back(r->metrics.se);
      if (r->metrics.r2) r2.push_back(*r->metrics.r2);
    }
    s.rmse = stats(rmse);
    s.mae = stats(mae);
    s.se = stats(se);
    if (!r2.empty()) s.r2 = stats(r2);
    out.push_back(s);
  }
  return out;
}

std::string format_rows_csv(const std::vector<BenchRow>& rows) {
  std::string out = std::string(kRowsHeader) + "\n";
  for (const auto& r : rows) {
    out += r.model + "," + std::to_string(r.train_size) + "," + std::to_string(r.rep) + "," + g9(r.metrics.rmse) + "," +
           g9(r.metrics.mae) + "," + (r.metrics.r2 ? g9(*r.metrics.r2) : std::string()) + "," + g9(r.metrics.se) +
           "\n";
  }
  return out;
}

std::vector<BenchRow> parse_rows_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kRowsHeader) throw FormatError("rows.csv: missing or malformed header");
  std::vector<BenchRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (line.back() == ',') f.emplace_back();
    if (f.size() != 7) throw FormatError("rows.csv line " + std::to_string(lineno) + ": expected 7 fields");
    auto num = [&](const std::string& s) {
      char* end = nullptr;
      const double v = std::strtod(s.c_str(), &end);
      if (s.empty() || *end != '\0') throw FormatError("rows.csv line " + std::to_string(lineno) + ": bad number");
      return v;
    };
    BenchRow r;
    r.model = f[0];
    r.train_size = static_cast<int>(num(f[1]));
    r.rep = static_cast<int>(num(f[2]));
    r.metrics.rmse = num(f[3]);
    r.metrics.mae = num(f[4]);
    if (!f[5].empty()) r.metrics.r2 = num(f[5]);
    r.metrics.se = num(f[6]);
    rows.push_back(r);
  }
  return rows;
}

std::string format_summary_csv(const std::vector<SummaryRow>& summary) {
  std::string out =
      "model,train_size,reps,rmse_mean,rmse_std,mae_mean,mae_std,r2_mean,r2_std,se_mean,se_std\n";
  for (const auto& s : summary) {
    out += s.model + "," + std::to_string(s.train_size) + "," + std::to_string(s.reps) + "," + g9(s.rmse.mean) + "," +
           g9(s.rmse.std) + "," + g9(s.mae.mean) + "," + g9(s.mae.std) + "," +
           (s.r2 ? g9(s.r2->mean) + "," + g9(s.r2->std) : std::string(",")) + "," + g9(s.se.mean) + "," +
           g9(s.se.std) + "\n";
  }
  return out;
}

std::string format_summary_table(const std::vector<SummaryRow>& summary) {
  std::string out;
  char buf[200];
  std::snprintf(buf, sizeof buf, "%-7s %6s %4s %11s %11s %11s %11s\n", "model", "size", "reps", "rmse", "mae", "r2",
                "se");
  out += buf;
  for (const auto& s : summary) {
    const std::string r2 = s.r2 ? g9(s.r2->mean) : "n/a";
    std::snprintf(buf, sizeof buf, "%-7s %6d %4d %11.5g %11.5g %11s %11.5g\n", s.model.c_str(), s.train_size, s.reps,
                  s.rmse.mean, s.mae.mean, r2.substr(0, 11).c_str(), s.se.mean);
    out += buf;
  }
  return out;
}

void emit_report(const BenchReport& report, const fs::path& out_dir) {
  if (report.rows.empty()) throw ContractError("refusing to emit an empty report");
  const auto summary = summarize(report);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  write_file(out_dir / "rows.csv", format_rows_csv(report.rows));
  write_file(out_dir / "summary.csv", format_summary_csv(summary));

  // Numbers go through %.9g so the JSON matches the CSV files digit for digit.
  auto num = [](double v) { return std::isfinite(v) ? detail::json::parse(g9(v)) : detail::json(nullptr); };
  auto stat = [&](const MetricStats& m) { return detail::json{{"mean", num(m.mean)}, {"std", num(m.std)}}; };
  detail::json groups = detail::json::array();
  for (const auto& s : summary) {
    groups.push_back({{"model", s.model},
                      {"train_size", s.train_size},
                      {"reps", s.reps},
                      {"rmse", stat(s.rmse)},
                      {"mae", stat(s.mae)},
                      {"r2", s.r2 ? stat(*s.r2) : detail::json(nullptr)},
                      {"se", stat(s.se)}});
  }
  detail::json doc{{"summary", groups}, {"pool_sha256", report.pool_hashes}};
  write_file(out_dir / "summary.json", doc.dump(2) + "\n");

  // One line per train size, both models side by side.
  std::map<int, std::map<std::string, const SummaryRow*>> by_size;
  for (const auto& s : summary) by_size[s.train_size][s.model] = &s;
  std::string curve = "train_size,direct_rmse,direct_r2,pgnn_rmse,pgnn_r2\n";
  for (const auto& [size, models] : by_size) {
    curve += std::to_string(size);
    for (const char* m : {"direct", "pgnn"}) {
      auto it = models.find(m);
      if (it == models.end()) {
        curve += ",,";
        continue;
      }
      curve += "," + g9(it->second->rmse.mean) + "," + (it->second->r2 ? g9(it->second->r2->mean) : std::string());
    }
    curve += "\n";
  }
  write_file(out_dir / "learning_curve.csv", curve);
}

}  // namespace pgnn
