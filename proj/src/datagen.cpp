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
#include "sphseg/datagen.hpp"

#include <algorithm>
#include <cmath>

#include "sphseg/binary_io.hpp"

namespace sphseg {
namespace {

constexpr std::uint32_t kDatasetVersion = 1;
constexpr std::uint32_t kFlagRotated = 1u;
constexpr std::uint32_t kFlagGridCenter = 2u;

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

// Seven-segment strokes in a unit box, x to the right and y down.
struct Segment {
  double x0, y0, x1, y1;
};
constexpr Segment kSegments[7] = {
    {0, 0, 1, 0},      // top
    {1, 0, 1, 0.5},    // upper right
    {1, 0.5, 1, 1},    // lower right
    {0, 1, 1, 1},      // bottom
    {0, 0.5, 0, 1},    // lower left
    {0, 0, 0, 0.5},    // upper left
    {0, 0.5, 1, 0.5},  // middle
};
constexpr std::uint8_t kDigitSegments[10] = {0x3f, 0x06, 0x5b, 0x4f, 0x66, 0x6d, 0x7d, 0x07, 0x7f, 0x6f};

double segment_distance(double px, double py, double x0, double y0, double x1, double y1) {
  const double dx = x1 - x0, dy = y1 - y0;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? ((px - x0) * dx + (py - y0) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(px - (x0 + t * dx), py - (y0 + t * dy));
}

SourceImage render_glyph(int digit, Rng& rng) {
  SourceImage img;
  img.label = static_cast<std::uint8_t>(digit);
  const double w = rng.uniform(8.0, 12.0), h = rng.uniform(15.0, 19.0);
  const double shear = rng.uniform(-0.3, 0.3), angle = rng.uniform(-0.2, 0.2);
  const double cx = 14.0 + rng.uniform(-1.5, 1.5), cy = 14.0 + rng.uniform(-1.5, 1.5);
  const double half_width = rng.uniform(1.0, 2.0);
  const double peak = rng.uniform(0.85, 1.0);
  const double ca = std::cos(angle), sa = std::sin(angle);
  auto place = [&](double ux, double uy) {
    const double x = (ux - 0.5) * w + shear * (uy - 0.5) * h;
    const double y = (uy - 0.5) * h;
    return std::array<double, 2>{cx + ca * x - sa * y, cy + sa * x + ca * y};
  };
  std::vector<std::array<double, 4>> strokes;
  for (int s = 0; s < 7; ++s) {
    if (!(kDigitSegments[digit] & (1u << s))) continue;
    const auto a = place(kSegments[s].x0, kSegments[s].y0);
    const auto b = place(kSegments[s].x1, kSegments[s].y1);
    strokes.push_back({a[0], a[1], b[0], b[1]});
  }
  for (int r = 0; r < kItemSize; ++r)
    for (int c = 0; c < kItemSize; ++c) {
      double d = 1e9;
      for (const auto& s : strokes) d = std::min(d, segment_distance(c + 0.5, r + 0.5, s[0], s[1], s[2], s[3]));
      const double v = std::clamp(half_width + 0.5 - d, 0.0, 1.0) * peak;
      img.pixels[r * kItemSize + c] = static_cast<std::uint8_t>(std::lround(255.0 * v));
    }
  return img;
}

void write_header(std::ostream& out, const DatasetHeader& h) {
  out.write("SPHD", 4);
  io::write_pod(out, kDatasetVersion);
  io::write_pod(out, static_cast<std::uint32_t>(h.L));
  io::write_pod(out, static_cast<std::uint32_t>(h.num_classes));
  io::write_pod(out, h.count);
  std::uint32_t flags = 0;
  if (h.rotated) flags |= kFlagRotated;
  if (h.projection == ProjectionPoint::kGridCenter) flags |= kFlagGridCenter;
  io::write_pod(out, flags);
  io::write_pod(out, static_cast<std::uint32_t>(h.threshold));
}

void write_record(std::ostream& out, const DatasetRecord& r) {
  io::write_array(out, r.rotation.matrix().data(), 9);
  std::vector<float> f(r.signal.values.begin(), r.signal.values.end());
  io::write_array(out, f.data(), f.size());
  io::write_array(out, r.mask.data(), r.mask.size());
  io::write_pod(out, static_cast<std::uint32_t>(r.source_ids.size()));
  io::write_array(out, r.source_ids.data(), r.source_ids.size());
}

}  // namespace

// ------------------------------------------------------------------ sources

std::vector<SourceImage> read_gray(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open " + path);
  io::expect_magic(in, "GRAY");
  const auto n = io::read_pod<std::uint64_t>(in, "image count");
  std::vector<SourceImage> out;
  for (std::uint64_t i = 0; i < n; ++i) {
    SourceImage img;
    img.label = io::read_pod<std::uint8_t>(in, "label");
    io::read_array(in, img.pixels.data(), img.pixels.size(), "pixels");
    out.push_back(img);
  }
  return out;
}

void write_gray(const std::string& path, std::span<const SourceImage> images) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::ios_base::failure("cannot open " + path + " for writing");
  out.write("GRAY", 4);
  io::write_pod(out, static_cast<std::uint64_t>(images.size()));
  for (const SourceImage& img : images) {
    io::write_pod(out, img.label);
    io::write_array(out, img.pixels.data(), img.pixels.size());
  }
  if (!out) throw std::ios_base::failure("write failed for " + path);
}

std::vector<SourceImage> synthetic_glyphs(std::size_t count, std::uint64_t seed) {
  std::vector<SourceImage> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, i));
    out[i] = render_glyph(static_cast<int>(i % 10), rng);
  }
  return out;
}

// ------------------------------------------------------------------ canvas

Canvas paste_items(std::span<const SourceImage* const> items, int threshold, Rng& rng) {
  if (threshold < 0 || threshold > 255) throw DomainError("threshold must lie in [0, 255]");
  Canvas canvas;
  for (const SourceImage* item : items) {
    const int r0 = static_cast<int>(rng.uniform_int(0, kCanvasSize - kItemSize));
    const int c0 = static_cast<int>(rng.uniform_int(0, kCanvasSize - kItemSize));
    canvas.offsets.push_back({r0, c0});
    for (int r = 0; r < kItemSize; ++r)
      for (int c = 0; c < kItemSize; ++c) {
        const std::uint8_t v = item->pixels[r * kItemSize + c];
        double& dst = canvas.at(r0 + r, c0 + c);
        dst = std::max(dst, v / 255.0);
        if (v >= threshold) canvas.mask[(r0 + r) * kCanvasSize + c0 + c] = static_cast<std::uint8_t>(item->label + 1);
      }
  }
  return canvas;
}

// ------------------------------------------------------------------ projection

const char* projection_point_name(ProjectionPoint p) { return p == ProjectionPoint::kPole ? "pole" : "grid_center"; }

ProjectionPoint parse_projection_point(const std::string& s) {
  if (s == "pole") return ProjectionPoint::kPole;
  if (s == "grid_center") return ProjectionPoint::kGridCenter;
  throw DomainError("unknown projection point '" + s + "' (expected pole or grid_center)");
}

ProjectionFrame projection_frame(ProjectionPoint p) {
  if (p == ProjectionPoint::kPole) return {{0, 0, 1}, {1, 0, 0}, {0, 1, 0}};
  return {{-1, 0, 0}, {0, -1, 0}, {0, 0, 1}};
}

ProjectedSample project_canvas_to_sphere(const Canvas& canvas, Bandlimit L, ProjectionPoint point, const Rotation& R,
                                         double angular_radius) {
  if (!(angular_radius > 0.0) || angular_radius >= kPi) throw DomainError("angular radius must lie in (0, pi)");
  const ProjectionFrame f = projection_frame(point);
  const double half = 2.0 * std::tan(angular_radius / 2);  // canvas half-width in plane units
  const double px_per_unit = (kCanvasSize / 2.0) / half;
  const int n = L.samples();
  const std::vector<double> thetas = dh_thetas(L.value());
  ProjectedSample out{SphericalSignal(L, 1), std::vector<std::uint8_t>(static_cast<std::size_t>(n) * n, 0)};
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      const Vec3 x = R.apply(sphere_point(thetas[j], kPi * k / L.value()));
      const double denom = 1.0 + dot(x, f.point);
      if (denom < 1e-12) continue;
      const double ux = 2.0 * dot(x, f.right) / denom;
      const double uy = 2.0 * dot(x, f.up) / denom;
      // Continuous pixel coordinates, 0 at the top-left corner of the canvas.
      const double col = ux * px_per_unit + kCanvasSize / 2.0;
      const double row = kCanvasSize / 2.0 - uy * px_per_unit;
      if (!(col >= 0.0 && col < kCanvasSize && row >= 0.0 && row < kCanvasSize)) continue;
      const int mr = static_cast<int>(row), mc = static_cast<int>(col);
      out.mask[static_cast<std::size_t>(j) * n + k] = canvas.mask[mr * kCanvasSize + mc];
      // Bilinear between pixel centres, clamped at the canvas border.
      const double fr = row - 0.5, fc = col - 0.5;
      const int r0 = static_cast<int>(std::floor(fr)), c0 = static_cast<int>(std::floor(fc));
      const double tr = fr - r0, tc = fc - c0;
      auto px = [&](int r, int c) {
        return canvas.at(std::clamp(r, 0, kCanvasSize - 1), std::clamp(c, 0, kCanvasSize - 1));
      };
      const double v = (1 - tr) * ((1 - tc) * px(r0, c0) + tc * px(r0, c0 + 1)) +
                       tr * ((1 - tc) * px(r0 + 1, c0) + tc * px(r0 + 1, c0 + 1));
      out.signal.at(0, j, k) = v;
    }
  return out;
}

double canvas_cap_area(double angular_radius) {
  // Stereographic area element on the plane: du dv / (1 + |u|^2 / 4)^2.
  // Tensor Gauss-Legendre on the square (integrand is smooth).
  const double a = 2.0 * std::tan(angular_radius / 2);
  constexpr int kPanels = 64;
  static const double gx[5] = {0.0, -0.5384693101056831, 0.5384693101056831, -0.9061798459386640, 0.9061798459386640};
  static const double gw[5] = {0.5688888888888889, 0.4786286704993665, 0.4786286704993665, 0.2369268850561891,
                               0.2369268850561891};
  std::vector<double> nodes, weights;
  const double h = 2 * a / kPanels;
  for (int p = 0; p < kPanels; ++p)
    for (int q = 0; q < 5; ++q) {
      nodes.push_back(-a + (p + 0.5) * h + 0.5 * h * gx[q]);
      weights.push_back(0.5 * h * gw[q]);
    }
  double area = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      const double r2 = nodes[i] * nodes[i] + nodes[j] * nodes[j];
      area += weights[i] * weights[j] / ((1 + r2 / 4) * (1 + r2 / 4));
    }
  return area;
}

// ------------------------------------------------------------------ generation

void validate_datagen_config(const DataGenConfig& cfg) {
  if (cfg.L < 1) throw DomainError("bandlimit must be >= 1");
  if (cfg.items_per_sphere < 1) throw DomainError("items_per_sphere must be >= 1");
  if (cfg.threshold < 0 || cfg.threshold > 255) throw DomainError("threshold must lie in [0, 255]");
  if (cfg.num_classes < 2 || cfg.num_classes > 256) throw DomainError("num_classes must lie in [2, 256]");
  if (!(cfg.angular_radius > 0.0) || cfg.angular_radius >= kPi) throw DomainError("angular radius must lie in (0, pi)");
}

DatasetRecord generate_record(const DataGenConfig& cfg, std::span<const SourceImage> sources, std::uint64_t index) {
  if (sources.empty()) throw DomainError("source pool is empty");
  Rng rng(derive_seed(cfg.seed, index));
  DatasetRecord rec;
  std::vector<const SourceImage*> items;
  for (int i = 0; i < cfg.items_per_sphere; ++i) {
    const auto id = static_cast<std::uint64_t>(rng.uniform_int(0, static_cast<std::int64_t>(sources.size()) - 1));
    if (sources[id].label + 1 >= cfg.num_classes) {
      throw DomainError("source " + std::to_string(id) + " has label " + std::to_string(sources[id].label) +
                        ", too large for " + std::to_string(cfg.num_classes) + " classes");
    }
    rec.source_ids.push_back(id);
    items.push_back(&sources[id]);
  }
  const Canvas canvas = paste_items(items, cfg.threshold, rng);
  if (cfg.rotated) rec.rotation = random_rotation(rng);
  ProjectedSample s = project_canvas_to_sphere(canvas, Bandlimit(cfg.L), cfg.projection, rec.rotation,
                                               cfg.angular_radius);
  for (double& v : s.signal.values) v = static_cast<float>(v);
  rec.signal = std::move(s.signal);
  rec.mask = std::move(s.mask);
  return rec;
}

std::vector<DatasetRecord> generate_records(const DataGenConfig& cfg, std::span<const SourceImage> sources,
                                            std::uint64_t first, std::size_t count) {
  validate_datagen_config(cfg);
  if (sources.empty() && count > 0) throw DomainError("source pool is empty");
  std::vector<DatasetRecord> out(count);
  const auto n = static_cast<std::int64_t>(count);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) out[i] = generate_record(cfg, sources, first + i);
  return out;
}

Dataset generate_dataset(const DataGenConfig& cfg, std::span<const SourceImage> sources, std::size_t n) {
  Dataset d;
  d.header = {cfg.L, cfg.num_classes, n, cfg.rotated, cfg.projection, cfg.threshold};
  d.records = generate_records(cfg, sources, 0, n);
  return d;
}

// ------------------------------------------------------------------ files

DatasetWriter::DatasetWriter(const std::string& path, const DatasetHeader& header)
    : out_(path, std::ios::binary | std::ios::trunc), path_(path), header_(header) {
  if (!out_) throw std::ios_base::failure("cannot open " + path + " for writing");
  write_header(out_, header_);
}

void DatasetWriter::append(const DatasetRecord& record) {
  const std::size_t plane = static_cast<std::size_t>(2 * header_.L) * (2 * header_.L);
  if (record.signal.values.size() != plane || record.mask.size() != plane) {
    throw ShapeError("record does not match the dataset bandlimit");
  }
  if (written_ >= header_.count) throw ShapeError("more records than announced in the header");
  write_record(out_, record);
  ++written_;
}

void DatasetWriter::close() {
  if (written_ != header_.count) {
    throw ShapeError("dataset announced " + std::to_string(header_.count) + " records, got " +
                     std::to_string(written_));
  }
  out_.close();
  if (!out_) throw std::ios_base::failure("write failed for " + path_);
}

void write_dataset(const std::string& path, const Dataset& dataset) {
  DatasetHeader h = dataset.header;
  h.count = dataset.records.size();
  DatasetWriter w(path, h);
  for (const DatasetRecord& r : dataset.records) w.append(r);
  w.close();
}

Dataset read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open " + path);
  io::expect_magic(in, "SPHD");
  const auto version = io::read_pod<std::uint32_t>(in, "version");
  if (version != kDatasetVersion) throw FormatError("unsupported dataset version " + std::to_string(version));
  Dataset d;
  d.header.L = static_cast<int>(io::read_pod<std::uint32_t>(in, "bandlimit"));
  d.header.num_classes = static_cast<int>(io::read_pod<std::uint32_t>(in, "num_classes"));
  d.header.count = io::read_pod<std::uint64_t>(in, "count");
  const auto flags = io::read_pod<std::uint32_t>(in, "flags");
  d.header.rotated = (flags & kFlagRotated) != 0;
  d.header.projection = (flags & kFlagGridCenter) != 0 ? ProjectionPoint::kGridCenter : ProjectionPoint::kPole;
  d.header.threshold = static_cast<int>(io::read_pod<std::uint32_t>(in, "threshold"));
  if (d.header.L < 1 || d.header.L > 4096) throw FormatError("implausible bandlimit " + std::to_string(d.header.L));
  const Bandlimit L(d.header.L);
  const std::size_t plane = static_cast<std::size_t>(L.samples()) * L.samples();
  std::vector<float> f(plane);
  for (std::uint64_t i = 0; i < d.header.count; ++i) {
    DatasetRecord r;
    Mat3 m;
    io::read_array(in, m.data(), 9, "rotation");
    r.rotation = Rotation::from_matrix(m);
    io::read_array(in, f.data(), plane, "signal");
    r.signal = SphericalSignal(L, 1);
    std::copy(f.begin(), f.end(), r.signal.values.begin());
    r.mask.resize(plane);
    io::read_array(in, r.mask.data(), plane, "mask");
    for (std::uint8_t v : r.mask)
      if (v >= d.header.num_classes) throw FormatError("mask class out of range in record " + std::to_string(i));
    r.source_ids.resize(io::read_pod<std::uint32_t>(in, "source id count"));
    io::read_array(in, r.source_ids.data(), r.source_ids.size(), "source ids");
    d.records.push_back(std::move(r));
  }
  return d;
}

// ------------------------------------------------------------------ metrics

std::vector<double> class_iou(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth,
                              int num_classes) {
  if (pred.size() != truth.size()) throw ShapeError("prediction and truth masks differ in size");
  std::vector<std::size_t> inter(num_classes, 0), uni(num_classes, 0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] >= num_classes || truth[i] >= num_classes) throw DomainError("mask class out of range");
    if (pred[i] == truth[i]) {
      ++inter[pred[i]];
      ++uni[pred[i]];
    } else {
      ++uni[pred[i]];
      ++uni[truth[i]];
    }
  }
  std::vector<double> iou(num_classes, std::nan(""));
  for (int c = 0; c < num_classes; ++c)
    if (uni[c] > 0) iou[c] = static_cast<double>(inter[c]) / static_cast<double>(uni[c]);
  return iou;
}

double miou(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth, int num_classes,
            bool drop_background) {
  const std::vector<double> iou = class_iou(pred, truth, num_classes);
  double sum = 0.0;
  int n = 0;
  for (int c = drop_background ? 1 : 0; c < num_classes; ++c) {
    if (std::isnan(iou[c])) continue;
    sum += iou[c];
    ++n;
  }
  if (n == 0) throw UndefinedMetricError("no class to average: every included class is absent from both masks");
  return sum / n;
}

}  // namespace sphseg
