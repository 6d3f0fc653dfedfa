#include "dissect/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "byte_io.hpp"
#include "dissect/errors.hpp"
#include "dissect/linalg.hpp"
#include "dissect/rng.hpp"

namespace dissect {

using io::ByteReader;
using io::ByteWriter;

namespace {

constexpr char kMagic[4] = {'D', 'S', 'C', 'T'};
constexpr std::uint32_t kVersion = 1;

std::vector<double> gaussian_vector(std::mt19937_64& rng, std::size_t n, double sd) {
  std::normal_distribution<double> g(0.0, sd);
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

}  // namespace

std::size_t Dataset::noisy_count() const {
  std::size_t c = 0;
  for (const auto& s : samples) c += s.is_noisy ? 1 : 0;
  return c;
}

Dataset generate_clean(std::size_t n, std::uint32_t d_img_in, std::uint32_t d_txt_in,
                       std::size_t k_concepts, double sigma, std::uint64_t seed) {
  if (k_concepts < 2 || n < k_concepts)
    throw InvalidConfigError("generate_clean requires n >= k_concepts >= 2");
  if (!(sigma > 0.0) && sigma != 0.0)
    throw InvalidConfigError("generate_clean requires sigma >= 0");
  if (d_img_in == 0 || d_txt_in == 0)
    throw InvalidConfigError("generate_clean requires positive feature dimensions");

  const std::size_t d_latent = std::min(d_img_in, d_txt_in);

  auto rng_c = make_stream(seed, RngStream::kConcepts);
  std::vector<std::vector<double>> concepts(k_concepts);
  for (auto& c : concepts) {
    c = gaussian_vector(rng_c, d_latent, 1.0);
    double norm = std::sqrt(dot(c, c));
    if (norm < 1e-12) norm = 1.0;
    for (auto& x : c) x /= norm;
  }

  auto rng_m = make_stream(seed, RngStream::kMixing);
  const double mix_sd = 1.0 / std::sqrt(static_cast<double>(d_latent));
  Matrix mix_img(d_img_in, d_latent);
  Matrix mix_txt(d_txt_in, d_latent);
  for (auto& x : mix_img.a) x = std::normal_distribution<double>(0.0, mix_sd)(rng_m);
  for (auto& x : mix_txt.a) x = std::normal_distribution<double>(0.0, mix_sd)(rng_m);

  auto rng_j = make_stream(seed, RngStream::kJitter);
  Dataset ds;
  ds.d_img_in = d_img_in;
  ds.d_txt_in = d_txt_in;
  ds.noise_rate = 0.0;
  ds.seed = seed;
  ds.samples.reserve(n);

  std::vector<double> z(d_latent), img(d_img_in), txt(d_txt_in);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = concepts[i % k_concepts];
    std::normal_distribution<double> g(0.0, 1.0);
    for (std::size_t d = 0; d < d_latent; ++d) z[d] = c[d] + sigma * g(rng_j);
    matvec(mix_img, z, img);
    matvec(mix_txt, z, txt);

    PairedSample s;
    s.id = i;
    s.original_partner_id = i;
    s.img_feat.assign(img.begin(), img.end());
    s.txt_feat.assign(txt.begin(), txt.end());
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

Dataset inject_noise(const Dataset& dataset, double eta, std::uint64_t seed) {
  if (eta < 0.0 || eta >= 1.0) throw InvalidConfigError("eta must lie in [0,1)");
  Dataset out = dataset;
  const std::size_t n = out.size();
  const std::size_t m = static_cast<std::size_t>(std::llround(eta * static_cast<double>(n)));
  out.noise_rate = eta;
  if (m == 0) return out;
  if (m < 2) throw InvalidConfigError("eta*n must round to >= 2 (or eta = 0)");

  auto rng = make_stream(seed, RngStream::kNoise);
  std::vector<std::uint64_t> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  std::vector<std::uint64_t> flagged;
  flagged.reserve(m);
  std::sample(ids.begin(), ids.end(), std::back_inserter(flagged), m, rng);
  std::shuffle(flagged.begin(), flagged.end(), rng);

  // Rotate captions along the shuffled cycle: sample flagged[i] receives the
  // original caption of flagged[i+1]. A rotation of a cycle of length >= 2
  // has no fixed point, so no sample keeps its own caption.
  std::vector<std::vector<float>> original_txt(m);
  for (std::size_t i = 0; i < m; ++i) original_txt[i] = dataset.samples[flagged[i]].txt_feat;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t donor = (i + 1) % m;
    auto& s = out.samples[flagged[i]];
    s.txt_feat = original_txt[donor];
    s.is_noisy = true;
    s.original_partner_id = flagged[donor];
  }
  return out;
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (dataset.samples[i].id != i)
      throw InvalidConfigError("write_dataset requires contiguous ids 0..n-1");
  }
  ByteWriter w(path);
  w.bytes(kMagic, 4);
  w.u32(kVersion);
  w.u64(dataset.size());
  w.u32(dataset.d_img_in);
  w.u32(dataset.d_txt_in);
  w.f64(dataset.noise_rate);
  w.u64(dataset.seed);
  for (const auto& s : dataset.samples)
    for (float v : s.img_feat) w.f32(v);
  for (const auto& s : dataset.samples)
    for (float v : s.txt_feat) w.f32(v);
  for (const auto& s : dataset.samples) {
    const std::uint8_t flag = s.is_noisy ? 1 : 0;
    w.bytes(&flag, 1);
  }
  for (const auto& s : dataset.samples) w.u64(s.original_partner_id);
  w.close();
}

Dataset read_dataset(const std::filesystem::path& path) {
  ByteReader r(path);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("bad magic", 0);
  const std::uint32_t version = r.u32();
  if (version != kVersion)
    throw VersionError("unknown dataset version " + std::to_string(version));

  Dataset ds;
  const std::uint64_t n = r.u64();
  ds.d_img_in = r.u32();
  ds.d_txt_in = r.u32();
  ds.noise_rate = r.f64();
  ds.seed = r.u64();

  // Validate total length up front so truncation reports expected vs actual.
  const std::uint64_t body = n * (4ull * ds.d_img_in + 4ull * ds.d_txt_in + 1 + 8);
  const std::uint64_t expected = r.pos() + body;
  if (r.size() != expected) {
    throw FormatError("length mismatch: expected " + std::to_string(expected) +
                          " bytes, have " + std::to_string(r.size()),
                      r.pos());
  }

  ds.samples.resize(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    ds.samples[i].id = i;
    ds.samples[i].img_feat.resize(ds.d_img_in);
    r.bytes(ds.samples[i].img_feat.data(), 4ull * ds.d_img_in);
  }
  for (std::uint64_t i = 0; i < n; ++i) {
    ds.samples[i].txt_feat.resize(ds.d_txt_in);
    r.bytes(ds.samples[i].txt_feat.data(), 4ull * ds.d_txt_in);
  }
  for (std::uint64_t i = 0; i < n; ++i) {
    std::uint8_t flag;
    r.bytes(&flag, 1);
    if (flag > 1) throw FormatError("is_noisy flag must be 0 or 1", r.pos() - 1);
    ds.samples[i].is_noisy = flag == 1;
  }
  for (std::uint64_t i = 0; i < n; ++i) ds.samples[i].original_partner_id = r.u64();
  for (std::uint64_t i = 0; i < n; ++i) {
    if (ds.samples[i].is_noisy != (ds.samples[i].original_partner_id != i))
      throw FormatError("inconsistent noise flag for sample " + std::to_string(i));
  }
  return ds;
}

Dataset import_embedding_dump(const std::filesystem::path& img_path,
                              const std::filesystem::path& txt_path,
                              const std::filesystem::path& manifest_path) {
  std::ifstream mf(manifest_path);
  if (!mf) throw IoError("cannot open manifest: " + manifest_path.string());
  std::uint64_t n = 0;
  std::uint32_t d_img = 0, d_txt = 0;
  if (!(mf >> n >> d_img >> d_txt))
    throw FormatError("manifest must contain \"n d_img d_txt\"");
  if (n == 0 || d_img == 0 || d_txt == 0)
    throw FormatError("manifest dimensions must be positive");

  auto read_matrix = [](const std::filesystem::path& p, std::uint64_t rows, std::uint32_t cols) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot open dump: " + p.string());
    in.seekg(0, std::ios::end);
    const std::uint64_t bytes = static_cast<std::uint64_t>(in.tellg());
    const std::uint64_t expected = rows * cols * 4ull;
    if (bytes != expected) {
      throw CountMismatchError(p.string() + ": expected " + std::to_string(expected) +
                               " bytes for " + std::to_string(rows) + "x" + std::to_string(cols) +
                               " float32, have " + std::to_string(bytes));
    }
    in.seekg(0);
    std::vector<float> data(rows * cols);
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(expected));
    if (!in) throw IoError("read failed: " + p.string());
    return data;
  };

  const auto img = read_matrix(img_path, n, d_img);
  const auto txt = read_matrix(txt_path, n, d_txt);

  Dataset ds;
  ds.d_img_in = d_img;
  ds.d_txt_in = d_txt;
  ds.ground_truth_available = false;
  ds.samples.resize(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    auto& s = ds.samples[i];
    s.id = i;
    s.original_partner_id = i;
    s.img_feat.assign(img.begin() + static_cast<std::ptrdiff_t>(i * d_img),
                      img.begin() + static_cast<std::ptrdiff_t>((i + 1) * d_img));
    s.txt_feat.assign(txt.begin() + static_cast<std::ptrdiff_t>(i * d_txt),
                      txt.begin() + static_cast<std::ptrdiff_t>((i + 1) * d_txt));
  }
  return ds;
}

void export_embedding_dump(const Dataset& dataset, const std::filesystem::path& img_path,
                           const std::filesystem::path& txt_path,
                           const std::filesystem::path& manifest_path) {
  {
    ByteWriter w(img_path);
    for (const auto& s : dataset.samples)
      for (float v : s.img_feat) w.f32(v);
    w.close();
  }
  {
    ByteWriter w(txt_path);
    for (const auto& s : dataset.samples)
      for (float v : s.txt_feat) w.f32(v);
    w.close();
  }
  std::ofstream mf(manifest_path);
  if (!mf) throw IoError("cannot open manifest for writing: " + manifest_path.string());
  mf << dataset.size() << " " << dataset.d_img_in << " " << dataset.d_txt_in << "\n";
  if (!mf) throw IoError("manifest write failed: " + manifest_path.string());
}

}  // namespace dissect
