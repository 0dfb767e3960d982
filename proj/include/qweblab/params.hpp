#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "qweblab/rng.hpp"
#include "qweblab/tape.hpp"

namespace qweblab {

enum class Init { Zero, Uniform01 /* U(-0.1, 0.1) */, FanIn, LstmBias, One };

// Named trainable matrices with Adam moment state. Initialization is derived
// from (seed, name), so it does not depend on registration order.
template <typename S>
class ParamStore {
 public:
  using Mat = typename Tape<S>::Mat;

  struct Entry {
    Mat value, grad, m, v;
  };

  explicit ParamStore(uint64_t seed = 0) : seed_(seed) {}

  uint64_t seed() const { return seed_; }

  Mat& add(const std::string& name, int rows, int cols, Init init) {
    if (entries_.count(name)) throw std::invalid_argument("duplicate param: " + name);
    Entry e;
    e.value = Mat::Zero(rows, cols);
    Rng rng(derive_seed(seed_, name));
    switch (init) {
      case Init::Zero:
        break;
      case Init::One:
        e.value.setOnes();
        break;
      case Init::Uniform01:
        for (int i = 0; i < rows; ++i)
          for (int j = 0; j < cols; ++j)
            e.value(i, j) = static_cast<S>(rng.uniform(-0.1, 0.1));
        break;
      case Init::FanIn: {
        double s = 1.0 / std::sqrt(static_cast<double>(cols));
        for (int i = 0; i < rows; ++i)
          for (int j = 0; j < cols; ++j)
            e.value(i, j) = static_cast<S>(rng.uniform(-s, s));
        break;
      }
      case Init::LstmBias: {
        // gate order i, f, g, o; forget gate bias +1
        int h = rows / 4;
        e.value.middleRows(h, h).setOnes();
        break;
      }
    }
    e.grad = Mat::Zero(rows, cols);
    e.m = Mat::Zero(rows, cols);
    e.v = Mat::Zero(rows, cols);
    auto [it, ok] = entries_.emplace(name, std::move(e));
    (void)ok;
    return it->second.value;
  }

  bool has(const std::string& name) const { return entries_.count(name) != 0; }

  Entry& at(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw std::out_of_range("no param: " + name);
    return it->second;
  }
  const Entry& at(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw std::out_of_range("no param: " + name);
    return it->second;
  }

  Mat& value(const std::string& name) { return at(name).value; }
  const Mat& value(const std::string& name) const { return at(name).value; }
  Mat& grad(const std::string& name) { return at(name).grad; }

  const std::map<std::string, Entry>& entries() const { return entries_; }

  void zero_grads() {
    for (auto& [name, e] : entries_) e.grad.setZero();
  }

  void check_grads_finite() const {
    for (auto& [name, e] : entries_)
      if (!e.grad.allFinite())
        throw std::runtime_error("non-finite gradient in parameter " + name);
  }

  void sgd_step(double lr) {
    check_grads_finite();
    for (auto& [name, e] : entries_) e.value -= static_cast<S>(lr) * e.grad;
  }

  void adam_step(double lr, double beta1 = 0.9, double beta2 = 0.999,
                 double eps = 1e-8) {
    check_grads_finite();
    ++adam_t_;
    const S b1 = static_cast<S>(beta1), b2 = static_cast<S>(beta2);
    const S corr1 = static_cast<S>(1.0 - std::pow(beta1, adam_t_));
    const S corr2 = static_cast<S>(1.0 - std::pow(beta2, adam_t_));
    for (auto& [name, e] : entries_) {
      e.m = b1 * e.m + (S(1) - b1) * e.grad;
      e.v = (b2 * e.v.array() + (S(1) - b2) * e.grad.array().square()).matrix();
      e.value.array() -= static_cast<S>(lr) * (e.m.array() / corr1) /
                         ((e.v.array() / corr2).sqrt() + static_cast<S>(eps));
    }
  }

  // Target-network style copy; shapes must already agree.
  void copy_values_from(const ParamStore& other) {
    for (auto& [name, e] : entries_) e.value = other.at(name).value;
  }

  int64_t adam_t() const { return adam_t_; }

  // ---- checkpoint container: JSON manifest + little-endian float32 blob ----

  void save(const std::string& path, const nlohmann::json& meta = {}) const {
    nlohmann::ordered_json manifest;
    manifest["format"] = "qweblab-checkpoint-v1";
    manifest["dtype"] = "f32";
    manifest["meta"] = meta.is_null() ? nlohmann::json::object() : meta;
    manifest["adam_t"] = adam_t_;
    nlohmann::ordered_json params = nlohmann::ordered_json::array();
    size_t offset = 0;
    for (const auto& [name, e] : entries_) {
      for (const char* part : {"value", "m", "v"}) {
        nlohmann::ordered_json p;
        p["name"] = name + std::string("/") + part;
        p["rows"] = e.value.rows();
        p["cols"] = e.value.cols();
        p["offset"] = offset;
        params.push_back(p);
        offset += sizeof(float) * e.value.size();
      }
    }
    manifest["params"] = params;
    std::string header = manifest.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path);
    uint64_t hlen = header.size();
    out.write("QWCKPT01", 8);
    out.write(reinterpret_cast<const char*>(&hlen), 8);
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    for (const auto& [name, e] : entries_) {
      write_blob(out, e.value);
      write_blob(out, e.m);
      write_blob(out, e.v);
    }
  }

  // Loads into an already-constructed store; validates shapes.
  nlohmann::json load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read checkpoint " + path);
    char magic[8];
    uint64_t hlen = 0;
    in.read(magic, 8);
    if (std::string(magic, 8) != "QWCKPT01")
      throw std::runtime_error("not a checkpoint file: " + path);
    in.read(reinterpret_cast<char*>(&hlen), 8);
    std::string header(hlen, '\0');
    in.read(header.data(), static_cast<std::streamsize>(hlen));
    nlohmann::json manifest = nlohmann::json::parse(header);
    adam_t_ = manifest.value("adam_t", int64_t{0});
    std::streampos blob_start = in.tellg();
    for (const auto& p : manifest.at("params")) {
      std::string full = p.at("name").get<std::string>();
      auto slash = full.rfind('/');
      std::string name = full.substr(0, slash);
      std::string part = full.substr(slash + 1);
      Entry& e = at(name);  // throws if the architecture lacks it
      int rows = p.at("rows").get<int>(), cols = p.at("cols").get<int>();
      if (rows != e.value.rows() || cols != e.value.cols())
        throw std::runtime_error("checkpoint shape mismatch for " + name);
      Mat& dst = part == "value" ? e.value : part == "m" ? e.m : e.v;
      in.seekg(blob_start + static_cast<std::streamoff>(p.at("offset").get<size_t>()));
      read_blob(in, dst);
    }
    return manifest.at("meta");
  }

  static nlohmann::json peek_meta(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read checkpoint " + path);
    char magic[8];
    uint64_t hlen = 0;
    in.read(magic, 8);
    if (std::string(magic, 8) != "QWCKPT01")
      throw std::runtime_error("not a checkpoint file: " + path);
    in.read(reinterpret_cast<char*>(&hlen), 8);
    std::string header(hlen, '\0');
    in.read(header.data(), static_cast<std::streamsize>(hlen));
    return nlohmann::json::parse(header).at("meta");
  }

 private:
  static void write_blob(std::ofstream& out, const Mat& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) {
        float f = static_cast<float>(m(i, j));
        out.write(reinterpret_cast<const char*>(&f), sizeof(float));
      }
  }

  static void read_blob(std::ifstream& in, Mat& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) {
        float f = 0;
        in.read(reinterpret_cast<char*>(&f), sizeof(float));
        m(i, j) = static_cast<S>(f);
      }
  }

  uint64_t seed_;
  int64_t adam_t_ = 0;
  std::map<std::string, Entry> entries_;
};

// Binds store entries to tape leaves for one forward pass and accumulates
// leaf gradients back after backward().
template <typename S>
class Leased {
 public:
  Leased(Tape<S>& tape, ParamStore<S>& store) : tape_(&tape), store_(&store) {}

  int operator()(const std::string& name) {
    auto it = vars_.find(name);
    if (it != vars_.end()) return it->second;
    int v = tape_->leaf(store_->value(name), /*requires_grad=*/tape_->grad_enabled());
    vars_.emplace(name, v);
    return v;
  }

  void accumulate_grads() {
    for (const auto& [name, v] : vars_) store_->grad(name) += tape_->grad(v);
  }

 private:
  Tape<S>* tape_;
  ParamStore<S>* store_;
  std::map<std::string, int> vars_;
};

}  // namespace qweblab
