#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pgnn/diffusion.hpp"
#include "pgnn/field.hpp"
#include "pgnn/random.hpp"

namespace pgnn {

/// Linear two-anchor colormap: channel c = alpha_c * x + beta_c with
/// beta = low_rgb and alpha = high_rgb - low_rgb.
struct ColormapSpec {
  std::array<int, 3> low_rgb{255, 255, 0};  // moisture 0: yellow
  std::array<int, 3> high_rgb{0, 100, 0};   // moisture 1: dark green

  double alpha(int channel) const { return high_rgb[channel] - low_rgb[channel]; }
  double beta(int channel) const { return low_rgb[channel]; }
  void validate() const;

  friend bool operator==(const ColormapSpec&, const ColormapSpec&) = default;
};

struct IntRange {
  int lo = 0;
  int hi = 0;

  friend bool operator==(const IntRange&, const IntRange&) = default;
};

struct NoiseSpec {
  double sigma_field = 0.02;
  double sigma_label = 0.01;
  IntRange circle_count{3, 7};
  IntRange circle_radius{2, 8};

  void validate() const;

  friend bool operator==(const NoiseSpec&, const NoiseSpec&) = default;
};

struct GeneratorConfig {
  GridSpec grid{64, 64};
  ScenarioRanges scenario;
  NoiseSpec noise;
  ColormapSpec colormap;
  bool save_fields = false;

  void validate() const;
};

struct SampleRecord {
  int sample_id = 0;
  RgbImage image;
  std::optional<MoistureField> true_field;
  double y_clean = 0.0;
  double y_noisy = 0.0;
};

struct Label {
  double y_clean = 0.0;
  double y_noisy = 0.0;
};

inline constexpr int kDatasetSchemaVersion = 1;
inline constexpr const char* kGeneratorVersion = "pgnn-synth/1.0";

struct DatasetManifest {
  int schema_version = kDatasetSchemaVersion;
  std::uint64_t base_seed = 0;
  int n_samples = 0;
  int height = 0;
  int width = 0;
  ColormapSpec colormap;
  NoiseSpec noise;
  ScenarioRanges scenario;
  std::string generator_version = kGeneratorVersion;
  bool has_fields = false;
  std::string labels_sha256;
};

/// Per-pixel rendering; rounds half away from zero and clamps to [0, 255].
/// Throws RangeError if any value lies outside [0, 1].
RgbImage render_colormap(const MoistureField& field, const ColormapSpec& cm);

/// Red-channel inversion x = (R - beta_R) / alpha_R, clipped to [0, 1].
MoistureField invert_colormap(const RgbImage& image, const ColormapSpec& cm);

/// Overwrites the disc (di^2 + dj^2 <= r^2) around (ci, cj) with `value`.
void stamp_circle(MoistureField& field, int ci, int cj, int radius, double value);

/// Draws the circle count, then per circle: center row, center column,
/// radius, fill value.
MoistureField stamp_circles(const MoistureField& field, const NoiseSpec& spec, Rng& rng);

/// Adds i.i.d. N(0, sigma^2) per pixel, then clips to [0, 1].
MoistureField add_field_noise(const MoistureField& field, double sigma, Rng& rng);

Label make_label(const MoistureField& clean_field, double sigma_label, Rng& rng);

/// One sample, deterministic in (config, base_seed, index). `true_field` is
/// the clean solver field.
SampleRecord generate_sample(const GeneratorConfig& config, std::uint64_t base_seed, int index);

/// Samples [first, first + n) in memory.
std::vector<SampleRecord> generate_samples(const GeneratorConfig& config, std::uint64_t base_seed, int n,
                                           int first = 0);

/// Writes the dataset directory; the manifest is written last.
DatasetManifest generate_dataset(const GeneratorConfig& config, std::uint64_t base_seed, int n,
                                 const std::filesystem::path& out_dir);

DatasetManifest read_manifest(const std::filesystem::path& dir);
std::string manifest_hash(const std::filesystem::path& dir);
std::vector<SampleRecord> load_dataset(const std::filesystem::path& dir);

/// labels.csv body for the given records (header included, LF endings).
std::string format_labels_csv(const std::vector<SampleRecord>& records);

std::string image_filename(int sample_id);
std::string field_filename(int sample_id);

}  // namespace pgnn
