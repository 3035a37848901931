#include "kt/checkpoint.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include "kt/errors.hpp"

namespace kt {
namespace {

constexpr char kMagic[8] = {'K', 'T', 'C', 'K', 'P', 'T', '1', '\n'};

void write_u32(std::ofstream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::ifstream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out.write(kMagic, sizeof(kMagic));

  const std::string config = model.config().to_json();
  write_u32(out, static_cast<std::uint32_t>(config.size()));
  out.write(config.data(), static_cast<std::streamsize>(config.size()));

  write_u32(out, static_cast<std::uint32_t>(model.params().size()));
  std::vector<float> buf;
  for (const auto& p : model.params()) {
    write_u32(out, static_cast<std::uint32_t>(p.name.size()));
    out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    const auto& m = p.node->value;
    write_u32(out, static_cast<std::uint32_t>(m.rows()));
    write_u32(out, static_cast<std::uint32_t>(m.cols()));
    buf.resize(static_cast<std::size_t>(m.size()));
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        buf[k++] = static_cast<float>(m(i, j));
      }
    }
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }
  if (!out) throw DataError("short write to " + path);
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw DataError(path + " is not a checkpoint");
  }

  Checkpoint ck;
  const std::uint32_t config_len = read_u32(in);
  std::string config(config_len, '\0');
  in.read(config.data(), config_len);
  ck.config = ModelConfig::from_json(config);

  const std::uint32_t n_tensors = read_u32(in);
  std::vector<float> buf;
  for (std::uint32_t k = 0; k < n_tensors; ++k) {
    const std::uint32_t name_len = read_u32(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const std::uint32_t rows = read_u32(in);
    const std::uint32_t cols = read_u32(in);
    buf.resize(static_cast<std::size_t>(rows) * cols);
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!in) throw DataError("truncated checkpoint " + path);
    ad::Matrix m(rows, cols);
    std::size_t i = 0;
    for (std::uint32_t r = 0; r < rows; ++r) {
      for (std::uint32_t c = 0; c < cols; ++c) m(r, c) = buf[i++];
    }
    ck.tensors.emplace_back(std::move(name), std::move(m));
  }
  return ck;
}

std::unique_ptr<Model> load_model(const std::string& path) {
  const Checkpoint ck = read_checkpoint(path);
  auto model = make_model(ck.config, /*seed=*/0);
  if (ck.tensors.size() != model->params().size()) {
    throw DataError("checkpoint parameter count mismatch");
  }
  for (auto& p : model->params()) {
    const auto it =
        std::find_if(ck.tensors.begin(), ck.tensors.end(),
                     [&](const auto& t) { return t.first == p.name; });
    if (it == ck.tensors.end()) {
      throw DataError("checkpoint is missing tensor '" + p.name + "'");
    }
    if (it->second.rows() != p.node->rows() || it->second.cols() != p.node->cols()) {
      throw DataError("checkpoint tensor '" + p.name + "' has wrong shape");
    }
    p.node->value = it->second;
  }
  return model;
}

}  // namespace kt
