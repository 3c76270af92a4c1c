#pragma once

// Versioned plain-text parameter checkpoints: name -> shaped array, values
// serialized as hexadecimal floats so load(save(x)) is bit-exact.

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dsopt/autodiff.hpp"
#include "dsopt/errors.hpp"

namespace dsopt {

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, ad::Tensor*>>& params);

std::map<std::string, ad::Tensor> load_checkpoint(const std::string& path);

// Loads into existing tensors; names and shapes must match exactly.
void load_checkpoint_into(const std::string& path,
                          const std::vector<std::pair<std::string, ad::Tensor*>>& params);

}  // namespace dsopt
