#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hexamp/net.hpp"

namespace hexamp {

// Raw scalar IO; file formats are little-endian and so are the supported
// hosts.
namespace bin {

template <typename T>
void write_raw(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("unexpected end of file");
  return v;
}

inline void write_bytes(std::ostream& os, const void* p, std::size_t n) {
  os.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n));
}

inline void read_bytes(std::istream& is, void* p, std::size_t n) {
  is.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n));
  if (!is) throw std::runtime_error("unexpected end of file");
}

}  // namespace bin

/// Named f64 tensor table, the payload of a checkpoint file.
struct TensorStore {
  struct Tensor {
    std::vector<std::uint64_t> dims;
    std::vector<double> data;
  };
  std::map<std::string, Tensor> tensors;

  bool has(const std::string& name) const { return tensors.count(name) > 0; }

  void put(const std::string& name, std::vector<std::uint64_t> dims,
           std::vector<double> data) {
    std::uint64_t n = 1;
    for (auto d : dims) n *= d;
    if (n != data.size()) throw std::invalid_argument("tensor '" + name + "': dim/data mismatch");
    tensors[name] = Tensor{std::move(dims), std::move(data)};
  }

  void put_matrix(const std::string& name, const Eigen::MatrixXd& m) {
    std::vector<double> d(m.data(), m.data() + m.size());
    put(name, {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())},
        std::move(d));
  }

  void put_vector(const std::string& name, const Eigen::VectorXd& v) {
    std::vector<double> d(v.data(), v.data() + v.size());
    put(name, {static_cast<std::uint64_t>(v.size())}, std::move(d));
  }

  void put_scalar(const std::string& name, double v) { put(name, {1}, {v}); }

  const Tensor& get(const std::string& name) const {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw std::runtime_error("checkpoint misses tensor '" + name + "'");
    return it->second;
  }

  Eigen::MatrixXd get_matrix(const std::string& name) const {
    const Tensor& t = get(name);
    if (t.dims.size() != 2) throw std::runtime_error("tensor '" + name + "' is not rank 2");
    Eigen::MatrixXd m(t.dims[0], t.dims[1]);
    std::memcpy(m.data(), t.data.data(), t.data.size() * sizeof(double));
    return m;
  }

  Eigen::VectorXd get_vector(const std::string& name) const {
    const Tensor& t = get(name);
    Eigen::VectorXd v(t.data.size());
    std::memcpy(v.data(), t.data.data(), t.data.size() * sizeof(double));
    return v;
  }

  double get_scalar(const std::string& name) const {
    const Tensor& t = get(name);
    if (t.data.size() != 1) throw std::runtime_error("tensor '" + name + "' is not a scalar");
    return t.data[0];
  }
};

inline constexpr char kCheckpointMagic[4] = {'H', 'A', 'M', 'P'};
inline constexpr std::uint16_t kCheckpointVersion = 1;

inline void save_tensor_store(const TensorStore& store, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  bin::write_bytes(os, kCheckpointMagic, 4);
  bin::write_raw<std::uint16_t>(os, kCheckpointVersion);
  bin::write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(store.tensors.size()));
  for (const auto& [name, t] : store.tensors) {
    bin::write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
    bin::write_bytes(os, name.data(), name.size());
    bin::write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) bin::write_raw<std::uint64_t>(os, d);
    bin::write_bytes(os, t.data.data(), t.data.size() * sizeof(double));
  }
  if (!os) throw std::runtime_error("write failed for '" + path + "'");
}

inline TensorStore load_tensor_store(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open '" + path + "'");
  char magic[4];
  bin::read_bytes(is, magic, 4);
  if (std::memcmp(magic, kCheckpointMagic, 4) != 0)
    throw std::runtime_error("'" + path + "' is not a checkpoint file");
  const auto version = bin::read_raw<std::uint16_t>(is);
  if (version != kCheckpointVersion)
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  const auto count = bin::read_raw<std::uint32_t>(is);
  TensorStore store;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = bin::read_raw<std::uint32_t>(is);
    std::string name(name_len, '\0');
    bin::read_bytes(is, name.data(), name_len);
    const auto rank = bin::read_raw<std::uint32_t>(is);
    std::vector<std::uint64_t> dims(rank);
    std::uint64_t n = 1;
    for (auto& d : dims) {
      d = bin::read_raw<std::uint64_t>(is);
      n *= d;
    }
    std::vector<double> data(n);
    bin::read_bytes(is, data.data(), n * sizeof(double));
    store.tensors[name] = TensorStore::Tensor{std::move(dims), std::move(data)};
  }
  return store;
}

// Mlp and Adam (de)serialization under a name prefix, e.g. "policy.low".

inline void pack_mlp(TensorStore& store, const std::string& prefix, const Mlp& net) {
  Eigen::VectorXd sizes(net.sizes.size());
  for (std::size_t i = 0; i < net.sizes.size(); ++i) sizes[i] = net.sizes[i];
  store.put_vector(prefix + ".sizes", sizes);
  for (int l = 0; l < net.num_layers(); ++l) {
    store.put_matrix(prefix + ".w" + std::to_string(l), net.w[l]);
    store.put_vector(prefix + ".b" + std::to_string(l), net.b[l]);
  }
}

inline Mlp unpack_mlp(const TensorStore& store, const std::string& prefix) {
  Eigen::VectorXd sizes = store.get_vector(prefix + ".sizes");
  std::vector<int> layer_sizes(sizes.size());
  for (Eigen::Index i = 0; i < sizes.size(); ++i) layer_sizes[i] = static_cast<int>(sizes[i]);
  Mlp net(layer_sizes);
  for (int l = 0; l < net.num_layers(); ++l) {
    net.w[l] = store.get_matrix(prefix + ".w" + std::to_string(l));
    net.b[l] = store.get_vector(prefix + ".b" + std::to_string(l));
  }
  return net;
}

inline void pack_adam(TensorStore& store, const std::string& prefix, const AdamState& a) {
  for (std::size_t l = 0; l < a.mw.size(); ++l) {
    store.put_matrix(prefix + ".mw" + std::to_string(l), a.mw[l]);
    store.put_matrix(prefix + ".vw" + std::to_string(l), a.vw[l]);
    store.put_vector(prefix + ".mb" + std::to_string(l), a.mb[l]);
    store.put_vector(prefix + ".vb" + std::to_string(l), a.vb[l]);
  }
  store.put_scalar(prefix + ".step", static_cast<double>(a.step));
  store.put_scalar(prefix + ".lr", a.lr);
}

inline void unpack_adam(const TensorStore& store, const std::string& prefix, AdamState& a) {
  for (std::size_t l = 0; l < a.mw.size(); ++l) {
    a.mw[l] = store.get_matrix(prefix + ".mw" + std::to_string(l));
    a.vw[l] = store.get_matrix(prefix + ".vw" + std::to_string(l));
    a.mb[l] = store.get_vector(prefix + ".mb" + std::to_string(l));
    a.vb[l] = store.get_vector(prefix + ".vb" + std::to_string(l));
  }
  a.step = static_cast<long>(store.get_scalar(prefix + ".step"));
  a.lr = store.get_scalar(prefix + ".lr");
}

}  // namespace hexamp
