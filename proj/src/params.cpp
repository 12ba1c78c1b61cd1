#include "pathqa/params.hpp"

#include <numeric>

#include "pathqa/common.hpp"

namespace pathqa {

namespace {
size_t dims_product(const std::vector<uint64_t>& dims) {
    size_t n = 1;
    for (uint64_t d : dims) n *= static_cast<size_t>(d);
    return n;
}
}  // namespace

Tensor* ParamStore::add(const std::string& name, std::vector<uint64_t> dims, bool no_decay) {
    if (by_name_.count(name)) throw UsageError("duplicate tensor name: " + name);
    auto t = std::make_unique<Tensor>();
    t->name = name;
    t->dims = std::move(dims);
    t->value.assign(dims_product(t->dims), 0.0);
    t->grad.assign(t->value.size(), 0.0);
    t->no_decay = no_decay;
    Tensor* ptr = t.get();
    tensors_.push_back(std::move(t));
    by_name_[name] = ptr;
    return ptr;
}

Tensor* ParamStore::find(const std::string& name) {
    auto it = by_name_.find(name);
    return it == by_name_.end() ? nullptr : it->second;
}

const Tensor* ParamStore::find(const std::string& name) const {
    auto it = by_name_.find(name);
    return it == by_name_.end() ? nullptr : it->second;
}

Tensor& ParamStore::require(const std::string& name) {
    Tensor* t = find(name);
    if (!t) throw DataError("missing tensor: " + name);
    return *t;
}

const Tensor& ParamStore::require(const std::string& name) const {
    const Tensor* t = find(name);
    if (!t) throw DataError("missing tensor: " + name);
    return *t;
}

std::vector<Tensor*> ParamStore::all() {
    std::vector<Tensor*> out;
    out.reserve(tensors_.size());
    for (auto& t : tensors_) out.push_back(t.get());
    return out;
}

std::vector<const Tensor*> ParamStore::all() const {
    std::vector<const Tensor*> out;
    out.reserve(tensors_.size());
    for (const auto& t : tensors_) out.push_back(t.get());
    return out;
}

void ParamStore::zero_grad() {
    for (auto& t : tensors_) t->zero_grad();
}

size_t ParamStore::parameter_count() const {
    size_t n = 0;
    for (const auto& t : tensors_) n += t->size();
    return n;
}

void write_checkpoint(const std::string& path, const std::vector<const Tensor*>& tensors) {
    BinaryWriter w(path);
    w.magic("RPRM1");
    for (const Tensor* t : tensors) {
        w.str(t->name);
        w.u32(static_cast<uint32_t>(t->dims.size()));
        for (uint64_t d : t->dims) w.u64(d);
        for (double v : t->value) w.f64(v);
    }
    w.close();
}

void ParamStore::save(const std::string& path) const {
    write_checkpoint(path, all());
}

Checkpoint Checkpoint::read(const std::string& path) {
    BinaryReader r(path);
    r.expect_magic("RPRM1");
    Checkpoint ckpt;
    while (!r.at_eof()) {
        Tensor t;
        t.name = r.str();
        uint32_t rank = r.u32();
        t.dims.resize(rank);
        for (auto& d : t.dims) d = r.u64();
        t.value.resize(dims_product(t.dims));
        for (double& v : t.value) v = r.f64();
        ckpt.tensors_.push_back(std::move(t));
    }
    return ckpt;
}

const Tensor* Checkpoint::find(const std::string& name) const {
    for (const Tensor& t : tensors_)
        if (t.name == name) return &t;
    return nullptr;
}

void ParamStore::load_from(const Checkpoint& ckpt) {
    for (auto& t : tensors_) {
        const Tensor* src = ckpt.find(t->name);
        if (!src) throw DataError("checkpoint missing tensor: " + t->name);
        if (src->dims != t->dims) throw DataError("shape mismatch for tensor: " + t->name);
        t->value = src->value;
    }
}

void ParamStore::load(const std::string& path) {
    load_from(Checkpoint::read(path));
}

}  // namespace pathqa
