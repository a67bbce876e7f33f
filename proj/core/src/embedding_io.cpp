#include "probemb/embedding_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include "binary_io.hpp"

namespace probemb {
namespace {

using detail::read_le;
using detail::write_le;

constexpr char kEmbMagic[4] = {'E', 'M', 'B', '1'};

std::string quoted(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) {
      return out;
    }
    start = tab + 1;
  }
}

template <typename T>
T parse_int(const std::string& field, const std::filesystem::path& path, std::size_t line_no,
            const char* column) {
  T value{};
  const char* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end || field.empty()) {
    throw FormatError(path.string() + ":" + std::to_string(line_no) + ": column " + column +
                      " is not an integer: '" + field + "'");
  }
  return value;
}

}  // namespace

void write_embeddings(const std::filesystem::path& path, const Matrix& matrix) {
  if (!matrix.allFinite()) {
    throw DomainError("write_embeddings: matrix has non-finite values");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open " + quoted(path) + " for writing");
  }
  out.write(kEmbMagic, 4);
  write_le<std::uint32_t>(out, kEmbVersion);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(matrix.cols()));
  write_le<std::uint64_t>(out, static_cast<std::uint64_t>(matrix.rows()));
  for (Eigen::Index i = 0; i < matrix.size(); ++i) {
    write_le<float>(out, static_cast<float>(matrix.data()[i]));
  }
  if (!out) {
    throw IoError("write failed for " + quoted(path));
  }
}

Matrix read_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + quoted(path));
  }
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, kEmbMagic, 4) != 0) {
    throw FormatError(quoted(path) + ": not an EMB1 file");
  }
  std::uint32_t version = 0, d = 0;
  std::uint64_t n = 0;
  if (!read_le(in, version)) {
    throw FormatError(quoted(path) + ": payload size mismatch (truncated header)");
  }
  if (version != kEmbVersion) {
    throw FormatError(quoted(path) + ": unsupported version " + std::to_string(version));
  }
  if (!read_le(in, d) || !read_le(in, n)) {
    throw FormatError(quoted(path) + ": payload size mismatch (truncated header)");
  }
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::uint64_t>(in.tellg());
  const std::uint64_t payload = size - kEmbHeaderBytes;
  // Guard the multiplication against a corrupted header.
  if (d != 0 && n > std::numeric_limits<std::uint64_t>::max() / 4 / d) {
    throw FormatError(quoted(path) + ": payload size mismatch (header claims too many rows)");
  }
  if (payload != 4 * n * d) {
    throw FormatError(quoted(path) + ": payload size mismatch (header says " +
                      std::to_string(n) + "x" + std::to_string(d) + ", file has " +
                      std::to_string(payload) + " payload bytes)");
  }
  in.seekg(static_cast<std::streamoff>(kEmbHeaderBytes));
  Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    float v = 0.0f;
    if (!read_le(in, v)) {
      throw FormatError(quoted(path) + ": payload size mismatch (short read)");
    }
    m.data()[i] = v;
  }
  return m;
}

PairList read_pairs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open " + quoted(path));
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw FormatError(path.string() + ":1: missing header line");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  bool with_meta = false;
  if (line == "text_row\timage_row\tlevel\ttokens\tgroup") {
    with_meta = true;
  } else if (line != "text_row\timage_row") {
    throw FormatError(path.string() +
                      ":1: header must be 'text_row<TAB>image_row[<TAB>level<TAB>tokens<TAB>group]'");
  }
  PairList out;
  if (with_meta) {
    out.metadata.emplace();
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      continue;
    }
    const auto fields = split_tabs(line);
    const std::size_t expect = with_meta ? 5 : 2;
    if (fields.size() != expect) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(expect) + " columns, found " +
                        std::to_string(fields.size()));
    }
    const auto t = parse_int<std::int64_t>(fields[0], path, line_no, "text_row");
    const auto i = parse_int<std::int64_t>(fields[1], path, line_no, "image_row");
    if (t < 0 || i < 0) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": row indices must be nonnegative");
    }
    out.pairs.push_back({t, i});
    if (with_meta) {
      out.metadata->push_back({parse_int<int>(fields[2], path, line_no, "level"),
                               parse_int<int>(fields[3], path, line_no, "tokens"), fields[4]});
    }
  }
  return out;
}

void write_pairs(const std::filesystem::path& path, const PairList& pairs) {
  if (pairs.metadata && pairs.metadata->size() != pairs.pairs.size()) {
    throw DomainError("write_pairs: metadata length differs from pair count");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open " + quoted(path) + " for writing");
  }
  out << (pairs.metadata ? "text_row\timage_row\tlevel\ttokens\tgroup\n" : "text_row\timage_row\n");
  for (std::size_t p = 0; p < pairs.pairs.size(); ++p) {
    out << pairs.pairs[p].text_row << '\t' << pairs.pairs[p].image_row;
    if (pairs.metadata) {
      const TextMeta& m = (*pairs.metadata)[p];
      out << '\t' << m.level << '\t' << m.tokens << '\t' << m.group;
    }
    out << '\n';
  }
  if (!out) {
    throw IoError("write failed for " + quoted(path));
  }
}

PairedEmbeddingDataset load_dataset(const std::filesystem::path& text_emb,
                                    const std::filesystem::path& image_emb,
                                    const std::filesystem::path& pairs, bool normalize) {
  return make_dataset(read_embeddings(text_emb), read_embeddings(image_emb), read_pairs(pairs),
                      normalize);
}

void PairedEmbeddingDataset::validate() const {
  if (text_embs.cols() != image_embs.cols()) {
    throw DomainError("dataset: text dimension " + std::to_string(text_embs.cols()) +
                      " differs from image dimension " + std::to_string(image_embs.cols()));
  }
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    if (pairs[p].text_row < 0 || pairs[p].text_row >= text_embs.rows() ||
        pairs[p].image_row < 0 || pairs[p].image_row >= image_embs.rows()) {
      throw DomainError("dataset: pair " + std::to_string(p) + " (" +
                        std::to_string(pairs[p].text_row) + ", " +
                        std::to_string(pairs[p].image_row) + ") is out of range for " +
                        std::to_string(text_embs.rows()) + " texts and " +
                        std::to_string(image_embs.rows()) + " images");
    }
  }
  if (metadata && metadata->size() != pairs.size()) {
    throw DomainError("dataset: metadata length differs from pair count");
  }
}

void normalize_rows_inplace(Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double n = m.row(r).norm();
    if (!(n > 0.0) || !std::isfinite(n)) {
      throw DomainError("normalize: row " + std::to_string(r) + " has zero or non-finite norm");
    }
    m.row(r) /= n;
  }
}

PairedEmbeddingDataset make_dataset(Matrix text_embs, Matrix image_embs, PairList pairs,
                                    bool normalize) {
  PairedEmbeddingDataset ds{std::move(text_embs), std::move(image_embs), std::move(pairs.pairs),
                            std::move(pairs.metadata)};
  if (normalize) {
    normalize_rows_inplace(ds.text_embs);
    normalize_rows_inplace(ds.image_embs);
  }
  ds.validate();
  return ds;
}

}  // namespace probemb
