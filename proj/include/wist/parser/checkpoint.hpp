#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>
#include <type_traits>

#include "json.hpp"
#include "wist/parser/model.hpp"

namespace wist::parser {

// Binary layout (little-endian):
//   magic "WISTCKPT", u32 version, u8 precision (4 or 8 bytes per value)
//   str config-json
//   5 vocab tables (chars, words, labels, pos, word_counts): u64 n, n x (str token, u64 freq), u8 has_unk
//   str lexicon (.wist text)
//   u64 n_params, n x (str name, u8 trainable, u8 rank, rank x u64 dim, values)
// where str = u64 length + bytes.
inline constexpr char kCheckpointMagic[8] = {'W', 'I', 'S', 'T', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}
  template <class U>
  void pod(U v) {
    static_assert(std::is_trivially_copyable_v<U>);
    out_.write(reinterpret_cast<const char*>(&v), sizeof(U));
  }
  void str(const std::string& s) {
    pod<std::uint64_t>(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}
  template <class U>
  U pod() {
    U v{};
    in_.read(reinterpret_cast<char*>(&v), sizeof(U));
    if (!in_) throw DataError("corrupt checkpoint: unexpected end of file");
    return v;
  }
  std::string str() {
    const auto n = pod<std::uint64_t>();
    if (n > (1ull << 34)) throw DataError("corrupt checkpoint: implausible string length");
    std::string s(n, '\0');
    in_.read(s.data(), static_cast<std::streamsize>(n));
    if (!in_) throw DataError("corrupt checkpoint: unexpected end of file");
    return s;
  }

 private:
  std::istream& in_;
};

inline void write_vocab(Writer& w, const Vocab& v) {
  w.pod<std::uint64_t>(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    w.str(v.token(i));
    w.pod<std::uint64_t>(v.freq(i));
  }
  w.pod<std::uint8_t>(v.has_unk() ? 1 : 0);
}

inline Vocab read_vocab(Reader& r) {
  Vocab v;
  const auto n = r.pod<std::uint64_t>();
  for (std::uint64_t i = 0; i < n; ++i) {
    auto tok = r.str();
    auto f = r.pod<std::uint64_t>();
    v.add(tok, f);
  }
  v.set_has_unk(r.pod<std::uint8_t>() != 0);
  return v;
}

}  // namespace detail

inline std::string config_dump(const ParserConfig& cfg) { return to_json(cfg).dump(2) + "\n"; }

template <class T>
void save_checkpoint(const BiaffineParser<T>& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint '" + path + "'");
  detail::Writer w(out);
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  w.pod<std::uint32_t>(kCheckpointVersion);
  w.pod<std::uint8_t>(sizeof(T));
  w.str(to_json(model.config).dump());
  for (const Vocab* v : {&model.vocabs.chars, &model.vocabs.words, &model.vocabs.labels, &model.vocabs.pos,
                         &model.vocabs.word_counts}) {
    detail::write_vocab(w, *v);
  }
  w.str(model.lexicon.export_wist());
  auto params = model.params.all();
  w.pod<std::uint64_t>(params.size());
  for (const auto* p : params) {
    w.str(p->name);
    w.pod<std::uint8_t>(p->trainable ? 1 : 0);
    w.pod<std::uint8_t>(static_cast<std::uint8_t>(p->value.shape.size()));
    for (auto d : p->value.shape) w.pod<std::uint64_t>(d);
    out.write(reinterpret_cast<const char*>(p->value.data.data()),
              static_cast<std::streamsize>(p->value.data.size() * sizeof(T)));
  }
  if (!out) throw DataError("failed writing checkpoint '" + path + "'");
  write_file(path + ".json", config_dump(model.config));
}

template <class T>
std::unique_ptr<BiaffineParser<T>> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint '" + path + "'");
  detail::Reader r(in);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw DataError("'" + path + "' is not a checkpoint");
  }
  const auto version = r.pod<std::uint32_t>();
  if (version != kCheckpointVersion) throw DataError("unsupported checkpoint version " + std::to_string(version));
  const auto precision = r.pod<std::uint8_t>();
  if (precision != 4 && precision != 8) throw DataError("corrupt checkpoint: precision " + std::to_string(precision));

  ParserConfig cfg;
  try {
    cfg = config_from_json(nlohmann::json::parse(r.str()));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("corrupt checkpoint config: ") + e.what());
  }
  Vocabs v;
  v.chars = detail::read_vocab(r);
  v.words = detail::read_vocab(r);
  v.labels = detail::read_vocab(r);
  v.pos = detail::read_vocab(r);
  v.word_counts = detail::read_vocab(r);
  const std::string lexicon = r.str();

  struct Blob {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<double> values;
  };
  std::vector<Blob> blobs;
  const auto n = r.pod<std::uint64_t>();
  bool has_pretrained = false;
  for (std::uint64_t i = 0; i < n; ++i) {
    Blob b;
    b.name = r.str();
    r.pod<std::uint8_t>();
    const auto rank = r.pod<std::uint8_t>();
    std::size_t count = 1;
    for (std::uint8_t k = 0; k < rank; ++k) {
      b.shape.push_back(r.pod<std::uint64_t>());
      count *= b.shape.back();
    }
    if (count > (1ull << 32)) throw DataError("corrupt checkpoint: implausible tensor size");
    b.values.resize(count);
    for (std::size_t k = 0; k < count; ++k) {
      b.values[k] = precision == 4 ? static_cast<double>(r.pod<float>()) : r.pod<double>();
    }
    has_pretrained = has_pretrained || b.name.ends_with(".pretrained");
    blobs.push_back(std::move(b));
  }

  std::unique_ptr<BiaffineParser<T>> model;
  {
    ad::init::SkipInit skip;
    model = std::make_unique<BiaffineParser<T>>(cfg, std::move(v), nullptr, has_pretrained);
  }
  if (!lexicon.empty()) model->lexicon = wordrep::Lexicon::import_wist(lexicon);
  if (blobs.size() != model->params.all().size()) throw DataError("checkpoint parameter count does not match its config");
  for (auto& b : blobs) {
    if (!model->params.contains(b.name)) throw DataError("checkpoint has unknown parameter '" + b.name + "'");
    auto& p = model->params.get(b.name);
    if (p.value.shape != b.shape) {
      throw DataError("parameter '" + b.name + "' has shape " + ad::shape_str(b.shape) + ", expected " +
                      ad::shape_str(p.value.shape));
    }
    for (std::size_t k = 0; k < b.values.size(); ++k) p.value.data[k] = static_cast<T>(b.values[k]);
  }
  return model;
}

}  // namespace wist::parser
