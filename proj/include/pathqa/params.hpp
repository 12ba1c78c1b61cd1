#pragma once
// Named parameter tensors with paired gradient buffers, plus the shared
// "RPRM1" checkpoint container (sequence of named f64 tensors).

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "pathqa/tensor.hpp"

namespace pathqa {

struct Tensor {
    std::string name;
    std::vector<uint64_t> dims;
    Vec value;
    Vec grad;
    bool no_decay = false;  // bias-like parameters skip weight decay

    size_t size() const { return value.size(); }
    void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
};

class ParamStore {
public:
    // Registers a tensor filled with zeros; returns a stable pointer.
    Tensor* add(const std::string& name, std::vector<uint64_t> dims, bool no_decay = false);

    Tensor* find(const std::string& name);
    const Tensor* find(const std::string& name) const;
    Tensor& require(const std::string& name);
    const Tensor& require(const std::string& name) const;

    std::vector<Tensor*> all();
    std::vector<const Tensor*> all() const;

    void zero_grad();
    size_t parameter_count() const;

    // Checkpoint IO. save() writes tensors in registration order; load()
    // matches by name and requires identical shapes.
    void save(const std::string& path) const;
    void load(const std::string& path);
    void load_from(const class Checkpoint& ckpt);

private:
    std::vector<std::unique_ptr<Tensor>> tensors_;
    std::unordered_map<std::string, Tensor*> by_name_;
};

// A raw checkpoint file: ordered named tensors, no model semantics.
class Checkpoint {
public:
    static Checkpoint read(const std::string& path);
    const std::vector<Tensor>& tensors() const { return tensors_; }
    const Tensor* find(const std::string& name) const;

private:
    std::vector<Tensor> tensors_;
};

void write_checkpoint(const std::string& path, const std::vector<const Tensor*>& tensors);

}  // namespace pathqa
