#include "dsopt/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace dsopt {

namespace {
constexpr const char* kMagic = "dsopt-checkpoint";
constexpr int kVersion = 1;
}  // namespace

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, ad::Tensor*>>& params) {
  std::ofstream out(path);
  if (!out) throw DataError("save_checkpoint: cannot open '" + path + "'");
  out << kMagic << ' ' << kVersion << '\n';
  out << params.size() << '\n';
  char buf[64];
  for (const auto& [name, tensor] : params) {
    out << "tensor " << name << ' ' << tensor->rank();
    for (auto e : tensor->shape) out << ' ' << e;
    out << '\n';
    for (std::size_t i = 0; i < tensor->values.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%a", tensor->values[i]);
      out << buf << (i + 1 == tensor->values.size() ? '\n' : ' ');
    }
    if (tensor->values.empty()) out << '\n';
  }
  if (!out) throw DataError("save_checkpoint: write failed for '" + path + "'");
}

std::map<std::string, ad::Tensor> load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("load_checkpoint: cannot open '" + path + "'");
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != kMagic || version != kVersion) {
    throw DataError("load_checkpoint: '" + path + "' is not a version-" +
                    std::to_string(kVersion) + " checkpoint");
  }
  std::size_t count = 0;
  in >> count;
  std::map<std::string, ad::Tensor> out;
  for (std::size_t i = 0; i < count; ++i) {
    std::string tag, name;
    std::size_t rank = 0;
    in >> tag >> name >> rank;
    if (!in || tag != "tensor") {
      throw DataError("load_checkpoint: malformed tensor header in '" + path + "'");
    }
    std::vector<std::size_t> shape(rank);
    std::size_t numel = 1;
    for (auto& e : shape) {
      in >> e;
      numel *= e;
    }
    std::vector<double> values(numel);
    for (auto& v : values) {
      std::string token;
      in >> token;
      if (!in) throw DataError("load_checkpoint: truncated values in '" + path + "'");
      char* end = nullptr;
      v = std::strtod(token.c_str(), &end);
      if (end == token.c_str()) {
        throw DataError("load_checkpoint: bad value '" + token + "' in '" + path + "'");
      }
    }
    out.emplace(name, ad::Tensor(std::move(shape), std::move(values)));
  }
  return out;
}

void load_checkpoint_into(const std::string& path,
                          const std::vector<std::pair<std::string, ad::Tensor*>>& params) {
  auto loaded = load_checkpoint(path);
  for (const auto& [name, tensor] : params) {
    auto it = loaded.find(name);
    if (it == loaded.end()) {
      throw DataError("load_checkpoint: missing tensor '" + name + "' in '" + path + "'");
    }
    if (it->second.shape != tensor->shape) {
      throw DataError("load_checkpoint: shape mismatch for '" + name + "'");
    }
    tensor->values = it->second.values;
  }
}

}  // namespace dsopt
