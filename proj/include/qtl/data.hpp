#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qtl/errors.hpp"
#include "qtl/tensor.hpp"

namespace qtl {

/// One preprocessed sample: 128x128 pixels in [0,1], binary label
/// (0 = non-demented, 1 = demented), positive patient id.
struct ImageSample {
  std::vector<float> pixels;
  int label = 0;
  int patient_id = 0;
};

struct Dataset {
  std::vector<ImageSample> samples;

  bool empty() const { return samples.empty(); }
  size_t size() const { return samples.size(); }
  std::vector<int> patient_per_sample() const;
  /// Pack selected samples into an image batch [N,1,128,128] and labels [N,1].
  std::pair<TensorF, TensorF> batch(const std::vector<int>& indices) const;
};

/// Raw decoded image, interleaved channels, values on the 0..255 scale.
struct RawImage {
  int width = 0;
  int height = 0;
  int channels = 1;  // 1 or 3
  std::vector<float> pixels;
};

RawImage read_pgm(const std::string& path);
/// 8-bit binary PGM from [0,1] floats (values are clamped and rounded).
void write_pgm(const std::string& path, const std::vector<float>& pixels01, int width, int height);

/// Grayscale (luminance 0.299R + 0.587G + 0.114B), bilinear resize to
/// 128x128 with half-pixel center alignment, then scale by 1/255.
std::vector<float> preprocess(const RawImage& raw);

/// Manifest CSV with header `path,patient_id,label`; image paths resolve
/// relative to the manifest's directory. Rows keep manifest order.
Dataset load_dataset(const std::string& manifest_path);

struct SplitAssignment {
  std::vector<int> train;
  std::vector<int> test;
  uint64_t seed = 0;
};

/// Patient-grouped split: every sample of patients 1 and 2 goes to train;
/// floor(test_fraction * count) of the remaining patients (at least one) form
/// the test set with all their images.
SplitAssignment split(const Dataset& dataset, uint64_t seed, double test_fraction = 0.30);
SplitAssignment split_by_patient(const std::vector<int>& patient_per_sample, uint64_t seed,
                                 double test_fraction = 0.30);

/// Synthetic stand-in dataset: smoothed random fields, plus a central
/// ellipse brightened by `signal_strength` on class-1 images. Patient 1
/// carries class 0, patient 2 class 1, later patients alternate. When
/// `out_dir` is non-empty, PGMs and a manifest.csv are written there and the
/// returned pixels are identical to what a reload would produce.
Dataset synth_generate(int n_patients, int images_per_patient, uint64_t seed,
                       double signal_strength, const std::string& out_dir = "");

}  // namespace qtl
