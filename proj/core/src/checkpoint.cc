#include "tagformer/checkpoint.h"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>

#include "tagformer/error.h"

namespace tagformer {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'T', 'G', 'F', 'C', 'K', 'P', 'T', '1'};

void put_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }

void put_str(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t get_u32(std::istream& in) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), 4)) throw DataError("checkpoint truncated");
  return v;
}

std::string get_str(std::istream& in) {
  const std::uint32_t n = get_u32(in);
  if (n > (1u << 24)) throw DataError("checkpoint string too long");
  std::string s(n, '\0');
  if (n > 0 && !in.read(s.data(), n)) throw DataError("checkpoint truncated");
  return s;
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += '\t';
    out += v[i];
  }
  return out;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  if (s.empty()) return out;
  std::size_t pos = 0;
  while (true) {
    const auto tab = s.find('\t', pos);
    out.push_back(s.substr(pos, tab - pos));
    if (tab == std::string::npos) break;
    pos = tab + 1;
  }
  return out;
}

}  // namespace

void write_model(const Model& model, std::ostream& out) {
  out.write(kMagic, sizeof kMagic);

  std::map<std::string, std::string> meta;
  for (const auto& [k, v] : model.encoder.to_fields()) meta["encoder." + k] = v;
  meta["objective"] = model.objective;
  meta["head"] = model.head ? to_string(*model.head) : "";
  meta["entities"] = join(model.entities);
  meta["hard_forbidden"] = model.hard_forbidden ? "1" : "0";
  put_u32(out, static_cast<std::uint32_t>(meta.size()));
  for (const auto& [k, v] : meta) {
    put_str(out, k);
    put_str(out, v);
  }

  const auto& pieces = model.vocab.pieces();
  put_u32(out, static_cast<std::uint32_t>(pieces.size() - kNumSpecials));
  for (std::size_t i = kNumSpecials; i < pieces.size(); ++i) put_str(out, pieces[i]);

  const auto params = model.params.all();
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const auto* p : params) {
    put_str(out, p->name);
    put_u32(out, static_cast<std::uint32_t>(p->value.rows()));
    put_u32(out, static_cast<std::uint32_t>(p->value.cols()));
    out.put(p->frozen ? 1 : 0);
    const auto values = p->value.values();
    out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(float)));
  }
  if (!out) throw DataError("failed writing checkpoint");
}

Model read_model(std::istream& in) {
  char magic[sizeof kMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw DataError("not a tagformer checkpoint");
  }
  Model model;

  std::map<std::string, std::string> meta, enc;
  const std::uint32_t n_meta = get_u32(in);
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string k = get_str(in);
    meta[k] = get_str(in);
  }
  for (const auto& [k, v] : meta) {
    if (k.rfind("encoder.", 0) == 0) enc[k.substr(8)] = v;
  }
  try {
    model.encoder = EncoderConfig::from_fields(enc);
  } catch (const ConfigError& e) {
    throw DataError(std::string("checkpoint encoder config: ") + e.what());
  }
  model.objective = meta["objective"];
  if (!meta["head"].empty()) model.head = parse_ner_head(meta["head"]);
  model.entities = split(meta["entities"]);
  model.hard_forbidden = meta["hard_forbidden"] == "1";

  const std::uint32_t n_pieces = get_u32(in);
  std::vector<std::string> pieces;
  pieces.reserve(n_pieces);
  for (std::uint32_t i = 0; i < n_pieces; ++i) pieces.push_back(get_str(in));
  model.vocab = Vocabulary(pieces);

  const std::uint32_t n_params = get_u32(in);
  for (std::uint32_t i = 0; i < n_params; ++i) {
    const std::string name = get_str(in);
    const std::uint32_t rows = get_u32(in);
    const std::uint32_t cols = get_u32(in);
    const int frozen = in.get();
    if (frozen < 0) throw DataError("checkpoint truncated");
    if (static_cast<std::uint64_t>(rows) * cols > (1ull << 32)) throw DataError("checkpoint array too large: " + name);
    Matrix<float> m(rows, cols);
    auto values = m.values();
    if (!in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(float)))) {
      throw DataError("checkpoint truncated in " + name);
    }
    model.params.add(name, std::move(m)).frozen = frozen != 0;
  }
  return model;
}

void save_model(const Model& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  write_model(model, out);
}

Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path);
  return read_model(in);
}

}  // namespace tagformer
