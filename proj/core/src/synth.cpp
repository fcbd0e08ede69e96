#include "pgnn/synth.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "json_util.hpp"
#include "pgnn/errors.hpp"
#include "pgnn/hash.hpp"
#include "pgnn/png_io.hpp"

namespace fs = std::filesystem;

namespace pgnn {

namespace {

constexpr const char* kMarker = ".incomplete";

std::string read_text(const fs::path& path, const std::string& subject) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    if (!fs::exists(path)) throw MissingFileError(subject, path.string());
    throw IoError("cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.close();
  if (!out) throw IoError("write failed: " + path.string());
}

std::string format_g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

detail::json manifest_json(const DatasetManifest& m) {
  return {{"schema_version", m.schema_version},
          {"base_seed", m.base_seed},
          {"n_samples", m.n_samples},
          {"height", m.height},
          {"width", m.width},
          {"colormap", detail::to_json(m.colormap)},
          {"noise", detail::to_json(m.noise)},
          {"scenario", detail::to_json(m.scenario)},
          {"generator_version", m.generator_version},
          {"has_fields", m.has_fields},
          {"labels_sha256", m.labels_sha256}};
}

struct LabelRow {
  double y_clean;
  double y_noisy;
};

std::map<int, LabelRow> parse_labels(const std::string& text) {
  std::map<int, LabelRow> rows;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "sample_id,y_clean,y_noisy") {
    throw FormatError("labels.csv: missing or malformed header");
  }
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const char* p = line.c_str();
    char* end = nullptr;
    const long id = std::strtol(p, &end, 10);
    if (end == p || *end != ',') throw FormatError("labels.csv line " + std::to_string(lineno) + ": bad sample_id");
    p = end + 1;
    const double yc = std::strtod(p, &end);
    if (end == p || *end != ',') throw FormatError("labels.csv line " + std::to_string(lineno) + ": bad y_clean");
    p = end + 1;
    const double yn = std::strtod(p, &end);
    if (end == p || *end != '\0') throw FormatError("labels.csv line " + std::to_string(lineno) + ": bad y_noisy");
    if (!rows.emplace(static_cast<int>(id), LabelRow{yc, yn}).second) {
      throw FormatError("labels.csv: duplicate sample_id " + std::to_string(id));
    }
  }
  return rows;
}

}  // namespace

void ColormapSpec::validate() const {
  for (int c = 0; c < 3; ++c) {
    if (low_rgb[c] < 0 || low_rgb[c] > 255 || high_rgb[c] < 0 || high_rgb[c] > 255) {
      throw ParameterError("colormap anchors must lie in [0, 255]");
    }
  }
  if (low_rgb[0] == high_rgb[0]) throw ParameterError("colormap red channel must be strictly monotone");
}

void NoiseSpec::validate() const {
  if (!(sigma_field >= 0.0) || !(sigma_label >= 0.0)) throw ParameterError("noise standard deviations must be >= 0");
  if (circle_count.lo < 0 || circle_count.lo > circle_count.hi) throw ParameterError("invalid circle count range");
  if (circle_radius.lo < 0 || circle_radius.lo > circle_radius.hi) throw ParameterError("invalid circle radius range");
}

void GeneratorConfig::validate() const {
  validate_grid(grid);
  scenario.validate();
  noise.validate();
  colormap.validate();
  if (noise.circle_radius.hi > std::min(grid.height, grid.width) / 2) {
    throw ParameterError("circle radius range exceeds the image");
  }
}

RgbImage render_colormap(const MoistureField& field, const ColormapSpec& cm) {
  RgbImage img(field.height(), field.width());
  for (int i = 0; i < field.height(); ++i) {
    for (int j = 0; j < field.width(); ++j) {
      const double x = field(i, j);
      if (!(x >= 0.0 && x <= 1.0)) {
        throw RangeError("field value " + format_g9(x) + " at (" + std::to_string(i) + "," + std::to_string(j) +
                         ") outside [0, 1]");
      }
      for (int c = 0; c < 3; ++c) {
        const double v = std::round(cm.alpha(c) * x + cm.beta(c));
        img.at(i, j, c) = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
      }
    }
  }
  return img;
}

MoistureField invert_colormap(const RgbImage& image, const ColormapSpec& cm) {
  MoistureField f(GridSpec{image.height, image.width});
  for (int i = 0; i < image.height; ++i) {
    for (int j = 0; j < image.width; ++j) {
      f(i, j) = std::clamp((image.at(i, j, 0) - cm.beta(0)) / cm.alpha(0), 0.0, 1.0);
    }
  }
  return f;
}

void stamp_circle(MoistureField& field, int ci, int cj, int radius, double value) {
  for (int i = std::max(0, ci - radius); i <= std::min(field.height() - 1, ci + radius); ++i) {
    for (int j = std::max(0, cj - radius); j <= std::min(field.width() - 1, cj + radius); ++j) {
      const int di = i - ci, dj = j - cj;
      if (di * di + dj * dj <= radius * radius) field(i, j) = value;
    }
  }
}

MoistureField stamp_circles(const MoistureField& field, const NoiseSpec& spec, Rng& rng) {
  MoistureField out = field;
  const int k = uniform_int(rng, spec.circle_count.lo, spec.circle_count.hi);
  for (int c = 0; c < k; ++c) {
    const int ci = uniform_int(rng, 0, field.height() - 1);
    const int cj = uniform_int(rng, 0, field.width() - 1);
    const int r = uniform_int(rng, spec.circle_radius.lo, spec.circle_radius.hi);
    const double v = uniform(rng, 0.0, 1.0);
    stamp_circle(out, ci, cj, r, v);
  }
  return out;
}

MoistureField add_field_noise(const MoistureField& field, double sigma, Rng& rng) {
  if (!(sigma >= 0.0)) throw ParameterError("noise sigma must be >= 0");
  MoistureField out = field;
  if (sigma == 0.0) return out;
  for (auto& v : out.values()) v += gaussian(rng, sigma);
  out.clip(0.0, 1.0);
  return out;
}

Label make_label(const MoistureField& clean_field, double sigma_label, Rng& rng) {
  if (!(sigma_label >= 0.0)) throw ParameterError("label sigma must be >= 0");
  const double y = integrate(clean_field);
  return {y, y + gaussian(rng, sigma_label)};
}

SampleRecord generate_sample(const GeneratorConfig& config, std::uint64_t base_seed, int index) {
  Rng rng(mix_seed(base_seed, static_cast<std::uint64_t>(index)));
  const DiffusionScenario scenario = sample_scenario(rng, config.scenario);
  MoistureField clean = solve_fourier(scenario, config.grid);
  const Label label = make_label(clean, config.noise.sigma_label, rng);
  const MoistureField noisy = add_field_noise(clean, config.noise.sigma_field, rng);
  const MoistureField stamped = stamp_circles(noisy, config.noise, rng);

  SampleRecord rec;
  rec.sample_id = index;
  rec.image = render_colormap(stamped, config.colormap);
  rec.y_clean = label.y_clean;
  rec.y_noisy = label.y_noisy;
  if (config.save_fields) rec.true_field = std::move(clean);
  return rec;
}

std::vector<SampleRecord> generate_samples(const GeneratorConfig& config, std::uint64_t base_seed, int n, int first) {
  config.validate();
  if (n < 0) throw ParameterError("sample count must be >= 0");
  std::vector<SampleRecord> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back(generate_sample(config, base_seed, first + i));
  return out;
}

std::string image_filename(int sample_id) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "images/sample_%05d.png", sample_id);
  return buf;
}

std::string field_filename(int sample_id) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "fields/sample_%05d.f32", sample_id);
  return buf;
}

std::string format_labels_csv(const std::vector<SampleRecord>& records) {
  std::string out = "sample_id,y_clean,y_noisy\n";
  for (const auto& r : records) {
    out += std::to_string(r.sample_id) + "," + format_g9(r.y_clean) + "," + format_g9(r.y_noisy) + "\n";
  }
  return out;
}

DatasetManifest generate_dataset(const GeneratorConfig& config, std::uint64_t base_seed, int n, const fs::path& out_dir) {
  config.validate();
  if (n < 0) throw ParameterError("sample count must be >= 0");

  std::error_code ec;
  fs::create_directories(out_dir / "images", ec);
  if (ec) throw IoError("cannot create " + (out_dir / "images").string() + ": " + ec.message());
  if (config.save_fields) {
    fs::create_directories(out_dir / "fields", ec);
    if (ec) throw IoError("cannot create " + (out_dir / "fields").string() + ": " + ec.message());
  }
  const fs::path marker = out_dir / kMarker;
  write_text(marker, "");
  fs::remove(out_dir / "manifest.json", ec);

  std::vector<SampleRecord> labels;
  labels.reserve(static_cast<std::size_t>(n));
  try {
    for (int i = 0; i < n; ++i) {
      SampleRecord rec = generate_sample(config, base_seed, i);
      write_png(rec.image, out_dir / image_filename(i));
      if (rec.true_field) write_raw_field(*rec.true_field, out_dir / field_filename(i));
      rec.image = RgbImage();
      rec.true_field.reset();
      labels.push_back(std::move(rec));
    }
    const std::string csv = format_labels_csv(labels);
    write_text(out_dir / "labels.csv", csv);

    DatasetManifest m;
    m.base_seed = base_seed;
    m.n_samples = n;
    m.height = config.grid.height;
    m.width = config.grid.width;
    m.colormap = config.colormap;
    m.noise = config.noise;
    m.scenario = config.scenario;
    m.has_fields = config.save_fields;
    m.labels_sha256 = sha256_hex(csv);
    write_text(out_dir / "manifest.json", manifest_json(m).dump(2) + "\n");
    fs::remove(marker);
    return m;
  } catch (...) {
    for (int i = 0; i < n; ++i) {
      fs::remove(out_dir / image_filename(i), ec);
      fs::remove(out_dir / field_filename(i), ec);
    }
    fs::remove(out_dir / "labels.csv", ec);
    fs::remove(marker, ec);
    throw;
  }
}

DatasetManifest read_manifest(const fs::path& dir) {
  const fs::path path = dir / "manifest.json";
  if (fs::exists(dir / kMarker)) throw FormatError(dir.string() + ": dataset generation did not complete");
  const auto j = detail::parse_json(read_text(path, "manifest"), path.string());
  detail::ObjectReader r(j, "manifest");
  DatasetManifest m;
  m.schema_version = r.require<int>("schema_version");
  if (m.schema_version != kDatasetSchemaVersion) {
    throw FormatError("unknown dataset schema version " + std::to_string(m.schema_version));
  }
  m.base_seed = r.require<std::uint64_t>("base_seed");
  m.n_samples = r.require<int>("n_samples");
  m.height = r.require<int>("height");
  m.width = r.require<int>("width");
  if (auto* v = r.find("colormap")) detail::merge(*v, m.colormap, "manifest.colormap");
  if (auto* v = r.find("noise")) detail::merge(*v, m.noise, "manifest.noise");
  if (auto* v = r.find("scenario")) detail::merge(*v, m.scenario, "manifest.scenario");
  m.generator_version = r.require<std::string>("generator_version");
  m.has_fields = r.require<bool>("has_fields");
  m.labels_sha256 = r.require<std::string>("labels_sha256");
  r.finish();
  if (m.n_samples < 0) throw FormatError("manifest: negative n_samples");
  return m;
}

std::string manifest_hash(const fs::path& dir) {
  const fs::path path = dir / "manifest.json";
  if (!fs::exists(path)) throw MissingFileError("manifest", path.string());
  return sha256_file_hex(path);
}

std::vector<SampleRecord> load_dataset(const fs::path& dir) {
  const DatasetManifest m = read_manifest(dir);
  const std::string csv = read_text(dir / "labels.csv", "labels");
  if (sha256_hex(csv) != m.labels_sha256) throw FormatError("labels.csv checksum does not match the manifest");
  const auto rows = parse_labels(csv);
  if (static_cast<int>(rows.size()) != m.n_samples) {
    throw FormatError("labels.csv has " + std::to_string(rows.size()) + " rows, manifest says " +
                      std::to_string(m.n_samples));
  }
  const GridSpec grid{m.height, m.width};
  std::vector<SampleRecord> out;
  out.reserve(rows.size());
  for (int id = 0; id < m.n_samples; ++id) {
    auto it = rows.find(id);
    if (it == rows.end()) throw FormatError("labels.csv lacks sample_id " + std::to_string(id));
    const fs::path img_path = dir / image_filename(id);
    if (!fs::exists(img_path)) throw MissingFileError("image of sample_id " + std::to_string(id), img_path.string());
    SampleRecord rec;
    rec.sample_id = id;
    rec.image = read_png(img_path);
    if (rec.image.height != m.height || rec.image.width != m.width) {
      throw DimensionError("sample_id " + std::to_string(id) + ": image is " + std::to_string(rec.image.height) + "x" +
                           std::to_string(rec.image.width) + ", manifest says " + std::to_string(m.height) + "x" +
                           std::to_string(m.width));
    }
    if (m.has_fields) {
      const fs::path fpath = dir / field_filename(id);
      if (!fs::exists(fpath)) throw MissingFileError("field of sample_id " + std::to_string(id), fpath.string());
      rec.true_field = read_raw_field(fpath, grid);
    }
    rec.y_clean = it->second.y_clean;
    rec.y_noisy = it->second.y_noisy;
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace pgnn
