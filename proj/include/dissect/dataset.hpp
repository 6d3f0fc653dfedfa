#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace dissect {

// One image-feature/text-feature pair. is_noisy and original_partner_id are
// ground truth: the trainer and selection strategies never see them except
// through the oracle baseline and the metrics module.
struct PairedSample {
  std::uint64_t id = 0;
  std::vector<float> img_feat;
  std::vector<float> txt_feat;
  bool is_noisy = false;
  std::uint64_t original_partner_id = 0;  // == id for clean samples
};

struct Dataset {
  std::vector<PairedSample> samples;
  std::uint32_t d_img_in = 0;
  std::uint32_t d_txt_in = 0;
  double noise_rate = 0.0;
  std::uint64_t seed = 0;
  // False for imported embedding dumps, where cleanliness is unknown.
  bool ground_truth_available = true;

  std::size_t size() const { return samples.size(); }
  std::size_t noisy_count() const;
};

// Concept-cluster generator: k unit concept vectors in a latent space of
// dimension min(d_img_in, d_txt_in); sample i gets latent
// z_i = concept[i % k] + sigma * eps_i (one jitter draw per sample, shared by
// both modalities), then fixed random per-modality mixing matrices map z_i to
// the feature spaces. All samples clean. Pure function of its arguments.
Dataset generate_clean(std::size_t n, std::uint32_t d_img_in, std::uint32_t d_txt_in,
                       std::size_t k_concepts, double sigma, std::uint64_t seed);

// Flags round(eta*n) samples uniformly and rotates their captions along a
// uniformly shuffled cycle, so no flagged sample keeps its own caption.
// original_partner_id records whose caption each flagged sample now carries.
Dataset inject_noise(const Dataset& dataset, double eta, std::uint64_t seed);

// DSCT binary format, little-endian. Sample ids are implicit row indices;
// write_dataset requires ids to be the contiguous range 0..n-1.
void write_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset read_dataset(const std::filesystem::path& path);

// Headerless float32 row-major matrices plus a text manifest "n d_img d_txt".
// Imported datasets carry no ground truth.
Dataset import_embedding_dump(const std::filesystem::path& img_path,
                              const std::filesystem::path& txt_path,
                              const std::filesystem::path& manifest_path);
void export_embedding_dump(const Dataset& dataset, const std::filesystem::path& img_path,
                           const std::filesystem::path& txt_path,
                           const std::filesystem::path& manifest_path);

}  // namespace dissect
