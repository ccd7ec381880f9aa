#include "causarc/features_io.hpp"

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "causarc/model.hpp"

namespace causarc {

namespace fs = std::filesystem;

void write_matrix_csv(const Matrix& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write matrix: " + path);
  out.precision(17);
  for (int i = 0; i < m.rows; ++i) {
    for (int j = 0; j < m.cols; ++j) {
      if (j) out << ',';
      out << m.at(i, j);
    }
    out << '\n';
  }
}

Matrix read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open matrix: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream is(line);
    std::string cell;
    while (std::getline(is, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw std::runtime_error("bad numeric cell in " + path);
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::runtime_error("ragged rows in " + path);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("empty matrix file: " + path);
  Matrix m(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) m.at(i, j) = rows[i][j];
  return m;
}

static constexpr char kMagic[4] = {'C', 'A', 'F', 'M'};

void write_matrix_f32(const Matrix& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write matrix: " + path);
  out.write(kMagic, 4);
  uint32_t r = static_cast<uint32_t>(m.rows), c = static_cast<uint32_t>(m.cols);
  out.write(reinterpret_cast<const char*>(&r), 4);
  out.write(reinterpret_cast<const char*>(&c), 4);
  for (double v : m.data) {
    float f = static_cast<float>(v);
    out.write(reinterpret_cast<const char*>(&f), 4);
  }
}

Matrix read_matrix_f32(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open matrix: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("bad magic in " + path);
  uint32_t r = 0, c = 0;
  in.read(reinterpret_cast<char*>(&r), 4);
  in.read(reinterpret_cast<char*>(&c), 4);
  if (!in || r == 0 || c == 0) throw std::runtime_error("bad header in " + path);
  Matrix m(static_cast<int>(r), static_cast<int>(c));
  for (auto& v : m.data) {
    float f;
    in.read(reinterpret_cast<char*>(&f), 4);
    if (!in) throw std::runtime_error("truncated matrix file: " + path);
    v = static_cast<double>(f);
  }
  return m;
}

Matrix read_matrix_any(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open matrix: " + path);
  char magic[4] = {0, 0, 0, 0};
  in.read(magic, 4);
  in.close();
  if (std::memcmp(magic, kMagic, 4) == 0) return read_matrix_f32(path);
  return read_matrix_csv(path);
}

void export_features(const Model& m, const Dataset& ds, const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::ofstream manifest(fs::path(out_dir) / "manifest.csv");
  if (!manifest) throw std::runtime_error("cannot write manifest in " + out_dir);
  manifest << "id,label,expl_tokens,path_T,path_V,path_A\n";
  for (const auto& s : ds.samples) {
    Tape t(false);
    ToyEncoded enc = toy_encode(t, m, s);
    std::string pt = s.id + "_T.csv", pv = s.id + "_V.csv", pa = s.id + "_A.csv";
    write_matrix_csv(t.val(enc.T), (fs::path(out_dir) / pt).string());
    write_matrix_csv(t.val(enc.V), (fs::path(out_dir) / pv).string());
    write_matrix_csv(t.val(enc.A), (fs::path(out_dir) / pa).string());
    manifest << s.id << ',' << s.label << ',';
    for (size_t i = 0; i < s.gt_explanation.tokens.size(); ++i) {
      if (i) manifest << ' ';
      manifest << s.gt_explanation.tokens[i];
    }
    manifest << ',' << pt << ',' << pv << ',' << pa << '\n';
  }
}

IngestResult ingest_features(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw std::runtime_error("cannot open manifest: " + manifest_path);
  fs::path base = fs::path(manifest_path).parent_path();

  IngestResult res;
  res.dataset.feature_mode = true;

  std::string line;
  if (!std::getline(in, line)) {
    res.errors.push_back("manifest is empty");
    return res;
  }
  if (line != "id,label,expl_tokens,path_T,path_V,path_A") {
    res.errors.push_back("unexpected manifest header: " + line);
    return res;
  }

  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream is(line);
    std::string cell;
    while (std::getline(is, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6) {
      res.errors.push_back("line " + std::to_string(lineno) + ": expected 6 fields");
      continue;
    }
    MultimodalSample s;
    s.id = cells[0];
    try {
      s.label = std::stoi(cells[1]);
    } catch (const std::exception&) {
      res.errors.push_back(s.id + ": bad label '" + cells[1] + "'");
      continue;
    }
    {
      std::istringstream ts(cells[2]);
      int tok;
      while (ts >> tok) s.gt_explanation.tokens.push_back(tok);
      s.gt_explanation.is_ground_truth = true;
    }
    bool ok = true;
    auto load = [&](const std::string& rel, Matrix& dst, const char* what) {
      try {
        dst = read_matrix_any((base / rel).string());
      } catch (const std::exception& e) {
        res.errors.push_back(s.id + ": " + what + ": " + e.what());
        ok = false;
      }
    };
    load(cells[3], s.text_features, "text features");
    load(cells[4], s.visual, "visual features");
    load(cells[5], s.acoustic, "acoustic features");
    if (!ok) continue;

    Dataset& ds = res.dataset;
    if (ds.samples.empty()) {
      ds.d_in_text = s.text_features.cols;
      ds.d_in_visual = s.visual.cols;
      ds.d_in_acoustic = s.acoustic.cols;
    } else {
      if (s.text_features.cols != ds.d_in_text) {
        res.errors.push_back(s.id + ": text width " + std::to_string(s.text_features.cols) +
                             " != declared " + std::to_string(ds.d_in_text));
        continue;
      }
      if (s.visual.cols != ds.d_in_visual) {
        res.errors.push_back(s.id + ": visual width " + std::to_string(s.visual.cols) +
                             " != declared " + std::to_string(ds.d_in_visual));
        continue;
      }
      if (s.acoustic.cols != ds.d_in_acoustic) {
        res.errors.push_back(s.id + ": acoustic width " + std::to_string(s.acoustic.cols) +
                             " != declared " + std::to_string(ds.d_in_acoustic));
        continue;
      }
    }
    res.dataset.samples.push_back(std::move(s));
  }
  return res;
}

}  // namespace causarc
