#include "pgru/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "pgru/error.hpp"

namespace pgru {

namespace {

constexpr std::uint8_t kMagic[4] = {'P', 'G', 'R', 'U'};

class ByteWriter {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(checked_u32(s.size()));
    out_.insert(out_.end(), s.begin(), s.end());
  }
  void raw(const std::uint8_t* p, std::size_t n) { out_.insert(out_.end(), p, p + n); }

  static std::uint32_t checked_u32(std::size_t n) {
    if (n > 0xFFFFFFFFu) throw InvalidArgument("checkpoint field exceeds 32-bit length");
    return static_cast<std::uint32_t>(n);
  }

  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  explicit ByteReader(const std::vector<std::uint8_t>& in) : in_(in) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw FormatError("checkpoint is truncated");
  }
  bool at_end() const { return pos_ == in_.size(); }
  std::size_t pos() const { return pos_; }
  void skip(std::size_t n) {
    need(n);
    pos_ += n;
  }

 private:
  const std::vector<std::uint8_t>& in_;
  std::size_t pos_ = 0;
};

bool same_bits(std::span<const double> a, std::span<const double> b) {
  return a.size() == b.size() && (a.empty() || std::memcmp(a.data(), b.data(), a.size_bytes()) == 0);
}

}  // namespace

bool bit_equal(const Checkpoint& a, const Checkpoint& b) {
  if (a.version != b.version || !(a.config == b.config) || a.epoch != b.epoch ||
      a.run_seed != b.run_seed ||
      std::bit_cast<std::uint64_t>(a.best_dev_metric) !=
          std::bit_cast<std::uint64_t>(b.best_dev_metric)) {
    return false;
  }
  const TensorSet& ta = a.params.tensors();
  const TensorSet& tb = b.params.tensors();
  if (!ta.same_layout(tb)) return false;
  for (std::size_t i = 0; i < ta.size(); ++i) {
    if (!same_bits(ta[i].values(), tb[i].values())) return false;
  }
  if (a.embedding_delta.size() != b.embedding_delta.size()) return false;
  for (std::size_t i = 0; i < a.embedding_delta.size(); ++i) {
    if (a.embedding_delta[i].first != b.embedding_delta[i].first ||
        !same_bits(a.embedding_delta[i].second.span(), b.embedding_delta[i].second.span())) {
      return false;
    }
  }
  return true;
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  ByteWriter w;
  w.raw(kMagic, sizeof(kMagic));
  w.u32(ckpt.version);
  w.str(serialize_config(ckpt.config));
  w.u32(ckpt.epoch);
  w.f64(ckpt.best_dev_metric);
  w.u64(ckpt.run_seed);

  const TensorSet& tensors = ckpt.params.tensors();
  w.u32(ByteWriter::checked_u32(tensors.size()));
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    w.u32(ByteWriter::checked_u32(tensors[i].rows()));
    w.u32(ByteWriter::checked_u32(tensors[i].cols()));
    for (double v : tensors[i].values()) w.f64(v);
  }

  w.u32(ByteWriter::checked_u32(ckpt.embedding_delta.size()));
  for (const auto& [word, vec] : ckpt.embedding_delta) {
    w.str(word);
    w.u32(ByteWriter::checked_u32(vec.dim()));
    for (double v : vec.values()) w.f64(v);
  }
  return w.take();
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes);
  r.need(4);
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("not a checkpoint (bad magic)");
  r.skip(4);

  Checkpoint ckpt;
  ckpt.version = r.u32();
  if (ckpt.version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(ckpt.version));
  }
  try {
    TrainConfig config;
    apply_config_text(config, r.str());
    validate(config);
    ckpt.config = config;
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint config block: ") + e.what());
  }
  ckpt.epoch = r.u32();
  ckpt.best_dev_metric = r.f64();
  ckpt.run_seed = r.u64();

  const std::uint32_t n_tensors = r.u32();
  if (n_tensors != 6 && n_tensors != 9) {
    throw FormatError("checkpoint holds " + std::to_string(n_tensors) + " tensors, expected 6 or 9");
  }
  const bool bias = n_tensors == 9;
  const std::size_t hidden = ckpt.config.hidden_dim;
  const std::size_t input = ckpt.config.embed_dim;
  GruParams reference = GruParams::zeros(input, hidden, bias);
  TensorSet tensors;
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    const DenseMatrix& expected = reference.tensors()[i];
    if (rows != expected.rows() || cols != expected.cols()) {
      throw FormatError("checkpoint tensor " + reference.tensors().name(i) + " has shape " +
                        std::to_string(rows) + "x" + std::to_string(cols) +
                        ", config implies " + std::to_string(expected.rows()) + "x" +
                        std::to_string(expected.cols()));
    }
    r.need(static_cast<std::size_t>(rows) * cols * 8);
    std::vector<double> values(static_cast<std::size_t>(rows) * cols);
    for (double& v : values) v = r.f64();
    tensors.add(reference.tensors().name(i), DenseMatrix(rows, cols, std::move(values)));
  }
  ckpt.params = GruParams::from_tensors(std::move(tensors));

  const std::uint32_t n_delta = r.u32();
  for (std::uint32_t i = 0; i < n_delta; ++i) {
    std::string word = r.str();
    const std::uint32_t dim = r.u32();
    if (dim != ckpt.config.embed_dim) throw FormatError("embedding delta has the wrong dimension");
    r.need(static_cast<std::size_t>(dim) * 8);
    std::vector<double> values(dim);
    for (double& v : values) v = r.f64();
    ckpt.embedding_delta.emplace_back(std::move(word), DenseVector(std::move(values)));
  }
  if (!r.at_end()) throw FormatError("checkpoint has trailing bytes");
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InvalidArgument("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_checkpoint(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace pgru
