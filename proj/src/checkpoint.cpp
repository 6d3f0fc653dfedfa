#include "dissect/checkpoint.hpp"

#include <cstring>

#include "byte_io.hpp"

namespace dissect {

using io::ByteReader;
using io::ByteWriter;

namespace {

constexpr char kMagic[4] = {'D', 'S', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

void write_matrix(ByteWriter& w, const Matrix& m) {
  w.u64(m.rows);
  w.u64(m.cols);
  for (double v : m.a) w.f64(v);
}

Matrix read_matrix(ByteReader& r) {
  const std::uint64_t rows = r.u64();
  const std::uint64_t cols = r.u64();
  if (rows * cols > (1ull << 28)) throw FormatError("matrix size out of range", r.pos());
  Matrix m(rows, cols);
  for (auto& v : m.a) v = r.f64();
  return m;
}

void write_tower(ByteWriter& w, const EncoderTower& t) {
  w.u32(static_cast<std::uint32_t>(t.depth));
  write_matrix(w, t.w1);
  if (t.depth == 2) write_matrix(w, t.w2);
}

EncoderTower read_tower(ByteReader& r) {
  EncoderTower t;
  t.depth = static_cast<int>(r.u32());
  if (t.depth != 1 && t.depth != 2) throw FormatError("tower depth must be 1 or 2", r.pos() - 4);
  t.w1 = read_matrix(r);
  if (t.depth == 2) t.w2 = read_matrix(r);
  return t;
}

}  // namespace

Checkpoint make_checkpoint(const TrainConfig& cfg, const TrainState& state) {
  Checkpoint c;
  c.config_echo = config_echo(cfg);
  c.seed = cfg.seed;
  c.epoch = state.epoch;
  c.step = state.step;
  c.forward_count = state.forward_count;
  c.backward_count = state.backward_count;
  c.params = state.params;
  c.velocity = state.velocity;
  c.ledger = state.ledger;
  return c;
}

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  ByteWriter w(path);
  w.bytes(kMagic, 4);
  w.u32(kVersion);
  w.str(ckpt.config_echo);
  w.u64(ckpt.seed);
  w.i32(ckpt.epoch);
  w.u64(ckpt.step);
  w.u64(ckpt.forward_count);
  w.u64(ckpt.backward_count);
  w.f64(ckpt.params.tau);
  write_tower(w, ckpt.params.img);
  write_tower(w, ckpt.params.txt);
  w.f64(ckpt.velocity.tau);
  write_matrix(w, ckpt.velocity.img_w1);
  write_matrix(w, ckpt.velocity.img_w2);
  write_matrix(w, ckpt.velocity.txt_w1);
  write_matrix(w, ckpt.velocity.txt_w2);

  w.u8(ckpt.ledger.initialized() ? 1 : 0);
  w.u64(ckpt.ledger.size());
  for (const auto& [id, e] : ckpt.ledger.entries()) {
    w.u64(id);
    w.u8(e.has_hist ? 1 : 0);
    w.f64(e.hist);
    w.u8(e.has_curr ? 1 : 0);
    w.f64(e.curr);
    w.i32(e.last_seen_epoch);
  }
  w.close();
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  ByteReader r(path);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("bad magic", 0);
  const std::uint32_t version = r.u32();
  if (version != kVersion)
    throw VersionError("unknown checkpoint version " + std::to_string(version));

  Checkpoint c;
  c.config_echo = r.str();
  c.seed = r.u64();
  c.epoch = r.i32();
  c.step = r.u64();
  c.forward_count = r.u64();
  c.backward_count = r.u64();
  c.params.tau = r.f64();
  c.params.img = read_tower(r);
  c.params.txt = read_tower(r);
  c.velocity.tau = r.f64();
  c.velocity.img_w1 = read_matrix(r);
  c.velocity.img_w2 = read_matrix(r);
  c.velocity.txt_w1 = read_matrix(r);
  c.velocity.txt_w2 = read_matrix(r);

  const bool initialized = r.u8() == 1;
  const std::uint64_t count = r.u64();
  std::map<std::uint64_t, double> hist;
  struct CurrRec {
    double score;
    int epoch;
  };
  std::map<std::uint64_t, CurrRec> curr;
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint64_t id = r.u64();
    const bool has_hist = r.u8() == 1;
    const double h = r.f64();
    const bool has_curr = r.u8() == 1;
    const double cu = r.f64();
    const int epoch = r.i32();
    if (has_hist) hist[id] = h;
    if (has_curr) curr[id] = {cu, epoch};
  }
  if (initialized) {
    c.ledger.snapshot_hist(hist);
  } else {
    // Momentum-style entries: replay as first observations.
    for (const auto& [id, h] : hist) c.ledger.update_hist_momentum(id, h, 0.5);
  }
  for (const auto& [id, rec] : curr) c.ledger.set_curr(id, rec.score, rec.epoch);
  if (r.pos() != r.size()) throw FormatError("trailing bytes after checkpoint", r.pos());
  return c;
}

}  // namespace dissect
