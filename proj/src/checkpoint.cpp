#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "rrn/trainer.hpp"

namespace rrn::train {
namespace {

constexpr std::string_view kMagic = "RRNCKPT1";

class Writer {
 public:
  void bytes(std::string_view s) { out_.append(s); }
  template <class U>
  void le(U v) {
    using Bits = std::conditional_t<sizeof(U) == 8, std::uint64_t,
                                    std::conditional_t<sizeof(U) == 4, std::uint32_t, std::uint8_t>>;
    const auto b = std::bit_cast<Bits>(v);
    for (std::size_t i = 0; i < sizeof(U); ++i) out_.push_back(static_cast<char>((b >> (8 * i)) & 0xFF));
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}

  std::string_view bytes(std::size_t n, const char* what) {
    need(n, what);
    const auto s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  template <class U>
  U le(const char* what) {
    using Bits = std::conditional_t<sizeof(U) == 8, std::uint64_t,
                                    std::conditional_t<sizeof(U) == 4, std::uint32_t, std::uint8_t>>;
    need(sizeof(U), what);
    Bits b = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      b |= static_cast<Bits>(static_cast<unsigned char>(in_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(U);
    return std::bit_cast<U>(b);
  }
  [[nodiscard]] std::size_t pos() const { return pos_; }
  [[nodiscard]] std::size_t remaining() const { return in_.size() - pos_; }

 private:
  void need(std::size_t n, const char* what) const {
    if (in_.size() - pos_ < n) {
      throw FormatError(std::string("truncated checkpoint: ") + what + " at offset " + std::to_string(pos_) +
                        " needs " + std::to_string(n) + " bytes, " + std::to_string(in_.size() - pos_) + " left");
    }
  }

  std::string_view in_;
  std::size_t pos_ = 0;
};

template <class T>
void write_tensor(Writer& w, const tg::Tensor<T>& t) {
  w.le<std::uint8_t>(std::is_same_v<T, float> ? 0 : 1);
  const tg::Shape& s = t.shape();
  w.le<std::uint32_t>(4);
  for (int d : {s.n, s.c, s.h, s.w}) w.le<std::uint64_t>(static_cast<std::uint64_t>(d));
  for (T v : t.data()) w.le<T>(v);
}

void write_table(Writer& w, const std::map<std::string, AnyTensor>& table) {
  w.le<std::uint32_t>(static_cast<std::uint32_t>(table.size()));
  for (const auto& [name, any] : table) {
    w.le<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
    w.bytes(name);
    std::visit([&](const auto& t) { write_tensor(w, t); }, any);
  }
}

template <class T>
AnyTensor read_payload(Reader& r, const tg::Shape& shape, const std::string& name) {
  const std::size_t n = shape.numel();
  if (r.remaining() / sizeof(T) < n) {
    throw FormatError("truncated checkpoint: tensor '" + name + "' needs " + std::to_string(n * sizeof(T)) +
                      " bytes at offset " + std::to_string(r.pos()) + ", " + std::to_string(r.remaining()) +
                      " left");
  }
  std::vector<T> data(n);
  for (auto& v : data) v = r.le<T>("tensor payload");
  return tg::Tensor<T>(shape, std::move(data));
}

std::map<std::string, AnyTensor> read_table(Reader& r) {
  const auto count = r.le<std::uint32_t>("tensor count");
  std::map<std::string, AnyTensor> table;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = r.le<std::uint32_t>("name length");
    std::string name(r.bytes(len, "tensor name"));
    const auto dtype = r.le<std::uint8_t>("dtype");
    if (dtype > 1) throw FormatError("tensor '" + name + "': unknown dtype code " + std::to_string(dtype));
    const auto rank = r.le<std::uint32_t>("rank");
    if (rank < 1 || rank > 4) throw FormatError("tensor '" + name + "': unsupported rank " + std::to_string(rank));
    int dims[4] = {1, 1, 1, 1};
    for (std::uint32_t d = 0; d < rank; ++d) {
      const auto v = r.le<std::uint64_t>("dims");
      if (v < 1 || v > (1ULL << 30)) throw FormatError("tensor '" + name + "': bad dimension " + std::to_string(v));
      dims[d] = static_cast<int>(v);
    }
    const tg::Shape shape{dims[0], dims[1], dims[2], dims[3]};
    AnyTensor t = dtype == 0 ? read_payload<float>(r, shape, name) : read_payload<double>(r, shape, name);
    if (!table.emplace(name, std::move(t)).second) throw FormatError("duplicate tensor name '" + name + "'");
  }
  return table;
}

template <std::floating_point T>
std::map<std::string, AnyTensor> to_table(const auto& named) {
  std::map<std::string, AnyTensor> out;
  for (const auto& [name, t] : named) out.emplace(name, t);
  return out;
}

template <std::floating_point T>
std::map<std::string, tg::Tensor<T>> from_table(const std::map<std::string, AnyTensor>& table) {
  std::map<std::string, tg::Tensor<T>> out;
  for (const auto& [name, any] : table) {
    const auto* t = std::get_if<tg::Tensor<T>>(&any);
    if (!t) {
      throw FormatError("tensor '" + name + "' is stored as " + (any.index() == 0 ? "f32" : "f64") +
                        ", requested " + (std::is_same_v<T, float> ? "f32" : "f64"));
    }
    out.emplace(name, *t);
  }
  return out;
}

}  // namespace

template <std::floating_point T>
Checkpoint Checkpoint::from(const ParamStore<T>& params, const OptState<T>* opt, nlohmann::json config) {
  Checkpoint c;
  c.tensors = to_table<T>(params);
  if (opt) {
    c.velocity = to_table<T>(opt->velocity);
    c.step = opt->step;
  }
  c.config = std::move(config);
  return c;
}

template <std::floating_point T>
ParamStore<T> Checkpoint::params() const {
  ParamStore<T> store;
  for (auto& [name, t] : from_table<T>(tensors)) store.set(name, std::move(t));
  return store;
}

template <std::floating_point T>
OptState<T> Checkpoint::opt_state() const {
  if (!velocity) throw FormatError("checkpoint carries no optimiser state");
  OptState<T> s;
  s.velocity = from_table<T>(*velocity);
  s.step = step;
  return s;
}

int Checkpoint::dtype() const {
  if (tensors.empty()) throw FormatError("checkpoint has no tensors");
  const auto code = static_cast<int>(tensors.begin()->second.index());
  for (const auto& [name, t] : tensors) {
    if (static_cast<int>(t.index()) != code) throw FormatError("checkpoint mixes f32 and f64 tensors");
  }
  return code;
}

template Checkpoint Checkpoint::from<float>(const ParamStore<float>&, const OptState<float>*, nlohmann::json);
template Checkpoint Checkpoint::from<double>(const ParamStore<double>&, const OptState<double>*, nlohmann::json);
template ParamStore<float> Checkpoint::params<float>() const;
template ParamStore<double> Checkpoint::params<double>() const;
template OptState<float> Checkpoint::opt_state<float>() const;
template OptState<double> Checkpoint::opt_state<double>() const;

std::string encode_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.bytes(kMagic);
  w.le<std::uint32_t>(Checkpoint::kVersion);
  write_table(w, ckpt.tensors);
  w.le<std::uint8_t>(ckpt.velocity ? 1 : 0);
  if (ckpt.velocity) {
    w.le<std::uint64_t>(ckpt.step);
    write_table(w, *ckpt.velocity);
  }
  const std::string cfg = ckpt.config.dump();
  w.le<std::uint64_t>(cfg.size());
  w.bytes(cfg);
  return w.take();
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  Reader r(bytes);
  if (bytes.size() < kMagic.size() || bytes.substr(0, kMagic.size()) != kMagic) {
    throw FormatError("bad magic: not an RRNCKPT1 checkpoint");
  }
  r.bytes(kMagic.size(), "magic");
  const auto version = r.le<std::uint32_t>("version");
  if (version != Checkpoint::kVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
  Checkpoint c;
  c.tensors = read_table(r);
  const auto has_opt = r.le<std::uint8_t>("optimiser flag");
  if (has_opt > 1) throw FormatError("corrupt optimiser flag at offset " + std::to_string(r.pos() - 1));
  if (has_opt) {
    c.step = r.le<std::uint64_t>("step");
    c.velocity = read_table(r);
  }
  const auto len = r.le<std::uint64_t>("config length");
  if (len > r.remaining()) throw FormatError("truncated checkpoint: config block");
  const auto cfg = r.bytes(static_cast<std::size_t>(len), "config");
  try {
    c.config = nlohmann::json::parse(cfg);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("corrupt checkpoint config: ") + e.what());
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after checkpoint at offset " + std::to_string(r.pos()));
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::string bytes = encode_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  try {
    return decode_checkpoint(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace rrn::train
