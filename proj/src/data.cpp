#include "qtl/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "qtl/rng.hpp"

namespace fs = std::filesystem;

namespace qtl {

namespace {

constexpr int kSide = 128;

// Bilinear resample with half-pixel center alignment; exact identity when
// the sizes match and constant-preserving always.
std::vector<float> bilinear_resize(const std::vector<float>& src, int sw, int sh, int dw, int dh) {
  std::vector<float> dst(size_t(dw) * dh);
  const double sx = static_cast<double>(sw) / dw;
  const double sy = static_cast<double>(sh) / dh;
  for (int y = 0; y < dh; ++y) {
    double fy = (y + 0.5) * sy - 0.5;
    fy = std::min(std::max(fy, 0.0), static_cast<double>(sh - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, sh - 1);
    const double wy = fy - y0;
    for (int x = 0; x < dw; ++x) {
      double fx = (x + 0.5) * sx - 0.5;
      fx = std::min(std::max(fx, 0.0), static_cast<double>(sw - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, sw - 1);
      const double wx = fx - x0;
      const double top = (1.0 - wx) * src[size_t(y0) * sw + x0] + wx * src[size_t(y0) * sw + x1];
      const double bot = (1.0 - wx) * src[size_t(y1) * sw + x0] + wx * src[size_t(y1) * sw + x1];
      dst[size_t(y) * dw + x] = static_cast<float>((1.0 - wy) * top + wy * bot);
    }
  }
  return dst;
}

int read_pnm_token(std::ifstream& in, const std::string& path) {
  // Skips whitespace and '#' comments between header tokens.
  for (;;) {
    int ch = in.peek();
    if (ch == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(ch)) {
      in.get();
    } else {
      break;
    }
  }
  int value = -1;
  if (!(in >> value) || value < 0) throw DataError("malformed PGM header in " + path);
  return value;
}

int parse_positive_int(const std::string& text, const std::string& what, size_t row) {
  try {
    size_t pos = 0;
    const long v = std::stol(text, &pos);
    if (pos != text.size() || v <= 0) throw std::invalid_argument(what);
    return static_cast<int>(v);
  } catch (const std::exception&) {
    throw DataError("manifest row " + std::to_string(row) + ": bad " + what + " '" + text + "'");
  }
}

}  // namespace

std::vector<int> Dataset::patient_per_sample() const {
  std::vector<int> ids(samples.size());
  for (size_t i = 0; i < samples.size(); ++i) ids[i] = samples[i].patient_id;
  return ids;
}

std::pair<TensorF, TensorF> Dataset::batch(const std::vector<int>& indices) const {
  const int64_t n = static_cast<int64_t>(indices.size());
  if (n == 0) throw DataError("empty batch request");
  TensorF images(Shape{n, 1, kSide, kSide});
  TensorF labels(Shape{n, 1});
  for (int64_t i = 0; i < n; ++i) {
    const ImageSample& s = samples.at(indices[i]);
    std::copy(s.pixels.begin(), s.pixels.end(), images.values.begin() + i * kSide * kSide);
    labels.values[i] = static_cast<float>(s.label);
  }
  return {std::move(images), std::move(labels)};
}

RawImage read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open image file " + path);
  char m0 = 0, m1 = 0;
  in.get(m0);
  in.get(m1);
  if (m0 != 'P' || m1 != '5') throw DataError("not a binary PGM (P5) file: " + path);
  const int width = read_pnm_token(in, path);
  const int height = read_pnm_token(in, path);
  const int maxval = read_pnm_token(in, path);
  if (width < 1 || height < 1) throw DataError("PGM with zero dimension: " + path);
  if (maxval != 255) throw DataError("PGM must be 8-bit (maxval 255): " + path);
  in.get();  // single whitespace after maxval
  std::vector<unsigned char> bytes(size_t(width) * height);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size()))
    throw DataError("truncated PGM data in " + path);
  RawImage img;
  img.width = width;
  img.height = height;
  img.channels = 1;
  img.pixels.assign(bytes.begin(), bytes.end());
  return img;
}

void write_pgm(const std::string& path, const std::vector<float>& pixels01, int width, int height) {
  if (static_cast<size_t>(width) * height != pixels01.size())
    throw DimensionError("write_pgm: pixel count does not match dimensions");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write image file " + path);
  out << "P5\n" << width << " " << height << "\n255\n";
  std::vector<unsigned char> bytes(pixels01.size());
  for (size_t i = 0; i < pixels01.size(); ++i) {
    const float v = std::min(std::max(pixels01[i], 0.0f), 1.0f);
    bytes[i] = static_cast<unsigned char>(std::lround(v * 255.0f));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<float> preprocess(const RawImage& raw) {
  if (raw.width < 1 || raw.height < 1) throw DataError("preprocess: zero-dimension image");
  if (raw.channels != 1 && raw.channels != 3)
    throw DataError("preprocess: expected 1 or 3 channels");
  if (raw.pixels.size() != size_t(raw.width) * raw.height * raw.channels)
    throw DimensionError("preprocess: pixel buffer does not match dimensions");

  std::vector<float> gray;
  if (raw.channels == 3) {
    gray.resize(size_t(raw.width) * raw.height);
    for (size_t i = 0; i < gray.size(); ++i) {
      const float r = raw.pixels[3 * i], g = raw.pixels[3 * i + 1], b = raw.pixels[3 * i + 2];
      gray[i] = 0.299f * r + 0.587f * g + 0.114f * b;
    }
  } else {
    gray = raw.pixels;
  }

  std::vector<float> resized = bilinear_resize(gray, raw.width, raw.height, kSide, kSide);
  for (float& v : resized) v = std::min(std::max(v / 255.0f, 0.0f), 1.0f);
  return resized;
}

Dataset load_dataset(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw DataError("cannot open manifest " + manifest_path);
  const fs::path base = fs::path(manifest_path).parent_path();

  std::string line;
  if (!std::getline(in, line)) throw DataError("manifest is empty (missing header)");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "path,patient_id,label")
    throw DataError("manifest header must be 'path,patient_id,label', got '" + line + "'");

  Dataset ds;
  size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string path_field, id_field, label_field;
    if (!std::getline(ss, path_field, ',') || !std::getline(ss, id_field, ',') ||
        !std::getline(ss, label_field))
      throw DataError("manifest row " + std::to_string(row) + ": expected 3 fields");
    if (label_field != "0" && label_field != "1")
      throw DataError("manifest row " + std::to_string(row) + ": label must be 0 or 1, got '" +
                      label_field + "'");
    ImageSample sample;
    sample.patient_id = parse_positive_int(id_field, "patient_id", row);
    sample.label = label_field == "1" ? 1 : 0;
    const fs::path img_path = fs::path(path_field).is_absolute()
                                  ? fs::path(path_field)
                                  : base / path_field;
    try {
      sample.pixels = preprocess(read_pgm(img_path.string()));
    } catch (const DataError& e) {
      throw DataError("manifest row " + std::to_string(row) + ": " + e.what());
    }
    ds.samples.push_back(std::move(sample));
  }
  return ds;
}

SplitAssignment split_by_patient(const std::vector<int>& patient_per_sample, uint64_t seed,
                                 double test_fraction) {
  if (patient_per_sample.empty()) throw ConfigError("split: dataset is empty");
  if (test_fraction <= 0.0 || test_fraction >= 1.0)
    throw ConfigError("split: test_fraction must lie in (0,1)");

  std::set<int> others;
  for (int id : patient_per_sample)
    if (id != 1 && id != 2) others.insert(id);
  if (others.empty()) throw ConfigError("split: no patients besides IDs 1 and 2");

  std::vector<int> pool(others.begin(), others.end());
  Rng rng(Rng::derive(seed, 0x5117));
  rng.shuffle(pool);
  const size_t n_test = std::max<size_t>(
      1, static_cast<size_t>(std::floor(test_fraction * static_cast<double>(pool.size()))));
  std::set<int> test_patients(pool.begin(), pool.begin() + n_test);

  SplitAssignment out;
  out.seed = seed;
  for (size_t i = 0; i < patient_per_sample.size(); ++i) {
    if (test_patients.count(patient_per_sample[i]))
      out.test.push_back(static_cast<int>(i));
    else
      out.train.push_back(static_cast<int>(i));
  }
  return out;
}

SplitAssignment split(const Dataset& dataset, uint64_t seed, double test_fraction) {
  return split_by_patient(dataset.patient_per_sample(), seed, test_fraction);
}

Dataset synth_generate(int n_patients, int images_per_patient, uint64_t seed,
                       double signal_strength, const std::string& out_dir) {
  if (n_patients < 4) throw ConfigError("synth_generate: need at least 4 patients");
  if (images_per_patient < 1) throw ConfigError("synth_generate: need at least 1 image per patient");

  std::ofstream manifest;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    manifest.open(fs::path(out_dir) / "manifest.csv", std::ios::binary);
    if (!manifest) throw DataError("cannot write manifest in " + out_dir);
    manifest << "path,patient_id,label\n";
  }

  constexpr int kGrid = 9;  // control grid for the smooth background field
  Dataset ds;
  for (int p = 1; p <= n_patients; ++p) {
    const int label = (p == 1) ? 0 : (p == 2) ? 1 : (p % 2 == 0 ? 1 : 0);
    for (int i = 0; i < images_per_patient; ++i) {
      Rng rng(Rng::derive(Rng::derive(seed, static_cast<uint64_t>(p)), static_cast<uint64_t>(i)));

      std::vector<float> grid(kGrid * kGrid);
      for (float& v : grid) v = static_cast<float>(rng.uniform(-1.0, 1.0));
      std::vector<float> img = bilinear_resize(grid, kGrid, kGrid, kSide, kSide);

      for (int y = 0; y < kSide; ++y)
        for (int x = 0; x < kSide; ++x) {
          double v = 0.45 + 0.12 * img[size_t(y) * kSide + x];
          if (label == 1 && signal_strength != 0.0) {
            const double ex = (x - 63.5) / 34.0, ey = (y - 63.5) / 26.0;
            if (ex * ex + ey * ey <= 1.0) v += signal_strength;
          }
          v += rng.uniform(-0.02, 0.02);
          img[size_t(y) * kSide + x] = static_cast<float>(std::min(std::max(v, 0.0), 1.0));
        }

      // Quantize exactly as the PGM on disk would store it, so the in-memory
      // dataset and a reload from out_dir are byte-equivalent.
      for (float& v : img)
        v = static_cast<float>(std::lround(v * 255.0f)) / 255.0f;

      char name[64];
      std::snprintf(name, sizeof(name), "p%03d_i%03d.pgm", p, i);
      if (!out_dir.empty()) {
        write_pgm((fs::path(out_dir) / name).string(), img, kSide, kSide);
        manifest << name << "," << p << "," << label << "\n";
      }
      ds.samples.push_back(ImageSample{std::move(img), label, p});
    }
  }
  return ds;
}

}  // namespace qtl
