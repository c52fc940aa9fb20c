/* Copyright 2026 The sphseg Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
// Spherical segmentation datasets: items pasted onto a 60x60 canvas, pulled
// back to the Driscoll-Healy grid by stereographic projection, optionally
// under a random rotation.
#ifndef SPHSEG_DATAGEN_HPP_
#define SPHSEG_DATAGEN_HPP_

#include <array>
#include <cstdint>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sphseg/grid.hpp"
#include "sphseg/rng.hpp"
#include "sphseg/signal.hpp"

namespace sphseg {

inline constexpr int kItemSize = 28;
inline constexpr int kCanvasSize = 60;

/// One 28x28 grayscale source raster (row-major, row 0 at the top).
struct SourceImage {
  std::uint8_t label = 0;
  std::array<std::uint8_t, kItemSize * kItemSize> pixels{};
};

/// Reads / writes the "GRAY" source container.
std::vector<SourceImage> read_gray(const std::string& path);
void write_gray(const std::string& path, std::span<const SourceImage> images);

/// Digit-like glyphs (seven-segment strokes with random affine jitter and
/// stroke width), labels 0..9. Stand-in for a real digit corpus.
std::vector<SourceImage> synthetic_glyphs(std::size_t count, std::uint64_t seed);

struct Canvas {
  std::vector<double> pixels;       // kCanvasSize^2, values in [0, 1]
  std::vector<std::uint8_t> mask;   // class id = label + 1, 0 = background
  std::vector<std::array<int, 2>> offsets;  // (row, col) of each pasted item

  Canvas() : pixels(kCanvasSize * kCanvasSize, 0.0), mask(kCanvasSize * kCanvasSize, 0) {}
  double& at(int r, int c) { return pixels[r * kCanvasSize + c]; }
  double at(int r, int c) const { return pixels[r * kCanvasSize + c]; }
};

/// Pastes the items at uniformly random in-bounds offsets. Intensities combine
/// by max; source pixels >= threshold write their class to the mask, later
/// items overwriting earlier ones.
Canvas paste_items(std::span<const SourceImage* const> items, int threshold, Rng& rng);

enum class ProjectionPoint { kPole, kGridCenter };

const char* projection_point_name(ProjectionPoint p);
ProjectionPoint parse_projection_point(const std::string& s);

/// Unit vector of the projection point and the in-plane axes (right, up) of
/// the canvas. The pole is +z; the grid center is theta = pi/2, phi = pi.
struct ProjectionFrame {
  Vec3 point, right, up;
};
ProjectionFrame projection_frame(ProjectionPoint p);

struct ProjectedSample {
  SphericalSignal signal;
  std::vector<std::uint8_t> mask;  // laid out like one signal channel
};

/// Samples the canvas at R x for every grid point x. The plane is tangent at
/// the projection point, projected from its antipode, and scaled so the
/// canvas half-width subtends `angular_radius`. Intensity is bilinear, the
/// mask nearest-neighbour; points off the canvas read 0.
ProjectedSample project_canvas_to_sphere(const Canvas& canvas, Bandlimit L, ProjectionPoint point, const Rotation& R,
                                         double angular_radius = kPi / 4);

/// Spherical area covered by the canvas square for the given angular radius.
double canvas_cap_area(double angular_radius = kPi / 4);

struct DataGenConfig {
  int L = 50;
  int items_per_sphere = 1;
  int threshold = 150;
  ProjectionPoint projection = ProjectionPoint::kPole;
  bool rotated = false;
  std::uint64_t seed = 0;
  int num_classes = 11;
  double angular_radius = kPi / 4;
};

void validate_datagen_config(const DataGenConfig& cfg);

struct DatasetRecord {
  Rotation rotation;
  SphericalSignal signal;  // single channel; values are exactly representable as f32
  std::vector<std::uint8_t> mask;
  std::vector<std::uint64_t> source_ids;
};

/// Record `index` of the dataset described by cfg; independent of all other
/// records (seeded by derive_seed(cfg.seed, index)).
DatasetRecord generate_record(const DataGenConfig& cfg, std::span<const SourceImage> sources, std::uint64_t index);

/// Records [first, first + count), generated in parallel.
std::vector<DatasetRecord> generate_records(const DataGenConfig& cfg, std::span<const SourceImage> sources,
                                            std::uint64_t first, std::size_t count);

struct DatasetHeader {
  int L = 0;
  int num_classes = 0;
  std::uint64_t count = 0;
  bool rotated = false;
  ProjectionPoint projection = ProjectionPoint::kPole;
  int threshold = 0;
};

struct Dataset {
  DatasetHeader header;
  std::vector<DatasetRecord> records;
};

Dataset generate_dataset(const DataGenConfig& cfg, std::span<const SourceImage> sources, std::size_t n);

/// Streams records into an "SPHD" file; the header count is fixed up front.
class DatasetWriter {
 public:
  DatasetWriter(const std::string& path, const DatasetHeader& header);
  void append(const DatasetRecord& record);
  /// Throws if fewer or more records than announced were appended.
  void close();

 private:
  std::ofstream out_;
  std::string path_;
  DatasetHeader header_;
  std::uint64_t written_ = 0;
};

void write_dataset(const std::string& path, const Dataset& dataset);
Dataset read_dataset(const std::string& path);

class UndefinedMetricError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Mean intersection over union over classes present in pred or truth,
/// optionally excluding class 0.
double miou(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth, int num_classes,
            bool drop_background);

/// Per-class IoU; NaN for classes absent from both masks.
std::vector<double> class_iou(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth,
                              int num_classes);

}  // namespace sphseg

#endif  // SPHSEG_DATAGEN_HPP_
