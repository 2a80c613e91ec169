#include "sls/trace_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>

#include "sls/errors.hpp"

namespace sls {
namespace {

void put_u32(std::string& buf, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) buf.push_back(static_cast<char>((v >> (8 * k)) & 0xffu));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  void read(unsigned char* dst, std::size_t n, const char* what) {
    in_.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw FormatError(std::string("truncated: stream ended inside ") + what);
    }
  }

  std::uint32_t u32(const char* what) {
    unsigned char b[4];
    read(b, 4, what);
    return get_u32(b);
  }

 private:
  std::istream& in_;
};

// Bytes left in a seekable stream, or -1 when the stream cannot seek.
std::streamoff remaining_bytes(std::istream& in) {
  const auto here = in.tellg();
  if (here == std::istream::pos_type(-1)) return -1;
  in.seekg(0, std::ios::end);
  const auto end = in.tellg();
  in.seekg(here);
  if (end == std::istream::pos_type(-1) || !in) {
    in.clear();
    return -1;
  }
  return end - here;
}

}  // namespace

Matrix FeatureTrace::layer_matrix(std::size_t layer) const {
  const auto& src = layers.at(layer);
  std::vector<double> data(src.begin(), src.end());
  return Matrix(n_samples, dim, std::move(data));
}

void validate_trace(const FeatureTrace& t) {
  if (t.n_layers == 0) throw ValidationError("n_layers must be positive");
  if (t.n_samples == 0) throw ValidationError("n_samples must be positive");
  if (t.dim == 0) throw ValidationError("dim must be positive");
  if (t.n_classes < 2) throw ValidationError("n_classes must be at least 2");
  if (t.layers.size() != t.n_layers) {
    throw ValidationError("layer count " + std::to_string(t.layers.size()) + " does not match n_layers " +
                          std::to_string(t.n_layers));
  }
  const std::size_t cells = static_cast<std::size_t>(t.n_samples) * t.dim;
  for (std::size_t l = 0; l < t.layers.size(); ++l) {
    if (t.layers[l].size() != cells) {
      throw ValidationError("layer " + std::to_string(l + 1) + " is not n_samples x dim");
    }
    for (std::size_t k = 0; k < cells; ++k) {
      if (!std::isfinite(t.layers[l][k])) {
        throw ValidationError("non-finite feature at layer " + std::to_string(l + 1) + ", sample " +
                              std::to_string(k / t.dim) + ", column " + std::to_string(k % t.dim));
      }
    }
  }
  if (t.labels.size() != t.n_samples) throw ValidationError("label count does not match n_samples");
  std::vector<bool> seen(t.n_classes, false);
  for (std::size_t i = 0; i < t.labels.size(); ++i) {
    if (t.labels[i] >= t.n_classes) {
      throw ValidationError("label " + std::to_string(t.labels[i]) + " at sample " + std::to_string(i) +
                            " is >= n_classes " + std::to_string(t.n_classes));
    }
    seen[t.labels[i]] = true;
  }
  for (std::uint32_t c = 0; c < t.n_classes; ++c) {
    if (!seen[c]) throw ValidationError("class " + std::to_string(c) + " has no samples");
  }
  if (t.dataset_name.size() > UINT32_MAX) throw ValidationError("dataset_name too long");
}

std::size_t slsf_size(const FeatureTrace& t) {
  return kSlsfHeaderBytes + t.dataset_name.size() +
         4 * static_cast<std::size_t>(t.n_layers) * t.n_samples * t.dim + 4 * static_cast<std::size_t>(t.n_samples);
}

void write_trace(const FeatureTrace& t, std::ostream& out) {
  validate_trace(t);

  std::string buf;
  buf.reserve(slsf_size(t));
  buf.append(kSlsfMagic, 4);
  put_u32(buf, kSlsfVersion);
  put_u32(buf, t.n_layers);
  put_u32(buf, t.n_samples);
  put_u32(buf, t.dim);
  put_u32(buf, t.n_classes);
  put_u32(buf, static_cast<std::uint32_t>(t.dataset_name.size()));
  buf.append(t.dataset_name);
  for (const auto& layer : t.layers) {
    for (float v : layer) put_u32(buf, std::bit_cast<std::uint32_t>(v));
  }
  for (std::uint32_t label : t.labels) put_u32(buf, label);

  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("failed writing SLSF stream");
}

void write_trace_file(const FeatureTrace& t, const std::filesystem::path& path) {
  validate_trace(t);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  write_trace(t, out);
  out.flush();
  if (!out) throw IoError("failed writing: " + path.string());
}

FeatureTrace load_trace(std::istream& in) {
  Reader r(in);
  unsigned char magic[4];
  r.read(magic, 4, "magic");
  if (std::memcmp(magic, kSlsfMagic, 4) != 0) throw FormatError("bad magic");
  const std::uint32_t version = r.u32("header");
  if (version != kSlsfVersion) throw FormatError("unsupported SLSF version " + std::to_string(version));

  FeatureTrace t;
  t.n_layers = r.u32("header");
  t.n_samples = r.u32("header");
  t.dim = r.u32("header");
  t.n_classes = r.u32("header");
  const std::uint32_t name_len = r.u32("header");

  if (t.n_layers == 0 || t.n_samples == 0 || t.dim == 0) throw FormatError("zero-sized dimension in header");

  // On seekable streams, reject short payloads before allocating from header sizes.
  const std::size_t payload = name_len + 4 * static_cast<std::size_t>(t.n_layers) * t.n_samples * t.dim +
                              4 * static_cast<std::size_t>(t.n_samples);
  if (const std::streamoff remaining = remaining_bytes(in); remaining >= 0) {
    if (static_cast<std::size_t>(remaining) < payload) throw FormatError("truncated: payload shorter than header declares");
    if (static_cast<std::size_t>(remaining) > payload) throw FormatError("trailing bytes after label block");
  }

  t.dataset_name.resize(name_len);
  if (name_len > 0) r.read(reinterpret_cast<unsigned char*>(t.dataset_name.data()), name_len, "dataset name");

  const std::size_t cells = static_cast<std::size_t>(t.n_samples) * t.dim;
  std::vector<unsigned char> raw(cells * 4);
  t.layers.reserve(t.n_layers);
  for (std::uint32_t l = 0; l < t.n_layers; ++l) {
    r.read(raw.data(), raw.size(), "feature block");
    std::vector<float> layer(cells);
    for (std::size_t k = 0; k < cells; ++k) layer[k] = std::bit_cast<float>(get_u32(raw.data() + 4 * k));
    t.layers.push_back(std::move(layer));
  }

  raw.resize(static_cast<std::size_t>(t.n_samples) * 4);
  r.read(raw.data(), raw.size(), "label block");
  t.labels.resize(t.n_samples);
  for (std::size_t i = 0; i < t.n_samples; ++i) t.labels[i] = get_u32(raw.data() + 4 * i);

  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after label block");

  validate_trace(t);
  return t;
}

FeatureTrace load_trace_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open trace file: " + path.string());
  return load_trace(in);
}

FeatureTrace subsample_trace(const FeatureTrace& trace, std::size_t max_samples, std::uint64_t seed) {
  if (max_samples < trace.n_classes) {
    throw ArgumentError("max_samples " + std::to_string(max_samples) + " is below n_classes " +
                        std::to_string(trace.n_classes));
  }
  if (trace.n_samples <= max_samples) return trace;

  const std::size_t p = trace.n_classes;
  std::vector<std::vector<std::size_t>> members(p);
  for (std::size_t i = 0; i < trace.labels.size(); ++i) members[trace.labels[i]].push_back(i);

  // One guaranteed row per class, the rest by largest remainder.
  const std::size_t budget = max_samples - p;
  const std::size_t pool = trace.n_samples - p;
  std::vector<std::size_t> quota(p, 1);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < p; ++c) {
    const double exact = static_cast<double>(members[c].size() - 1) * static_cast<double>(budget) /
                         static_cast<double>(pool);
    const auto whole = static_cast<std::size_t>(std::floor(exact));
    quota[c] += whole;
    assigned += whole;
    remainders.emplace_back(exact - static_cast<double>(whole), c);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < budget && k < remainders.size(); ++k) {
    const std::size_t c = remainders[k].second;
    if (quota[c] < members[c].size()) {
      ++quota[c];
      ++assigned;
    }
  }

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> keep;
  keep.reserve(max_samples);
  for (std::size_t c = 0; c < p; ++c) {
    auto rows = members[c];
    // Partial Fisher-Yates; std::shuffle's draw pattern is library-specific.
    for (std::size_t k = 0; k < quota[c]; ++k) {
      const std::size_t span = rows.size() - k;
      const std::size_t pick = k + static_cast<std::size_t>(rng() % span);
      std::swap(rows[k], rows[pick]);
    }
    keep.insert(keep.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(quota[c]));
  }
  std::sort(keep.begin(), keep.end());

  FeatureTrace out;
  out.n_layers = trace.n_layers;
  out.n_samples = static_cast<std::uint32_t>(keep.size());
  out.dim = trace.dim;
  out.n_classes = trace.n_classes;
  out.dataset_name = trace.dataset_name;
  out.layers.resize(trace.n_layers);
  for (std::size_t l = 0; l < trace.n_layers; ++l) {
    auto& dst = out.layers[l];
    dst.reserve(keep.size() * trace.dim);
    for (std::size_t i : keep) {
      const auto first = trace.layers[l].begin() + static_cast<std::ptrdiff_t>(i * trace.dim);
      dst.insert(dst.end(), first, first + trace.dim);
    }
  }
  out.labels.reserve(keep.size());
  for (std::size_t i : keep) out.labels.push_back(trace.labels[i]);
  return out;
}

}  // namespace sls
