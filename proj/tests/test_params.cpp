#include <doctest.h>

#include "pathqa/common.hpp"
#include "pathqa/optim.hpp"
#include "pathqa/params.hpp"
#include "test_helpers.hpp"

using namespace pathqa;
using namespace pathqa::testing;

TEST_CASE("checkpoint round-trips named tensors bit-exactly") {
    ParamStore store;
    Tensor* a = store.add("m.weight", {2, 3});
    Tensor* b = store.add("m.bias", {3}, /*no_decay=*/true);
    for (size_t i = 0; i < a->size(); ++i) a->value[i] = 0.25 * (i + 1);
    b->value = {1e-300, -0.0, 3.14159};

    std::string p1 = tmp_path("ckpt1.bin"), p2 = tmp_path("ckpt2.bin");
    store.save(p1);

    ParamStore loaded;
    loaded.add("m.weight", {2, 3});
    loaded.add("m.bias", {3}, true);
    loaded.load(p1);
    CHECK(loaded.require("m.weight").value == a->value);
    CHECK(loaded.require("m.bias").value == b->value);

    loaded.save(p2);
    CHECK(read_text_file(p1) == read_text_file(p2));
}

TEST_CASE("loading rejects missing tensors and shape mismatches") {
    ParamStore store;
    store.add("m.weight", {2});
    std::string path = tmp_path("ckpt3.bin");
    store.save(path);

    ParamStore wrong_name;
    wrong_name.add("m.other", {2});
    CHECK_THROWS_AS(wrong_name.load(path), DataError);

    ParamStore wrong_shape;
    wrong_shape.add("m.weight", {3});
    CHECK_THROWS_AS(wrong_shape.load(path), DataError);
}

TEST_CASE("adamw applies decoupled decay to weight tensors only") {
    ParamStore store;
    Tensor* w = store.add("w", {1});
    Tensor* b = store.add("b", {1}, /*no_decay=*/true);
    w->value[0] = 1.0;
    b->value[0] = 1.0;
    w->grad[0] = 0.0;
    b->grad[0] = 0.0;

    OptimConfig cfg;
    cfg.lr = 0.1;
    cfg.weight_decay = 0.5;
    AdamW opt(store.all(), cfg);
    opt.step();
    CHECK(w->value[0] == doctest::Approx(1.0 - 0.1 * 0.5 * 1.0));
    CHECK(b->value[0] == 1.0);
}

TEST_CASE("warmup schedule ramps then decays linearly") {
    ParamStore store;
    store.add("w", {1});
    OptimConfig cfg;
    cfg.lr = 1.0;
    cfg.warmup_fraction = 0.1;
    cfg.total_steps = 100;
    AdamW opt(store.all(), cfg);
    CHECK(opt.current_lr() == doctest::Approx(0.1));  // step 1 of 10 warmup steps
    for (int i = 0; i < 10; ++i) opt.step();
    CHECK(opt.current_lr() == doctest::Approx(1.0 * (100.0 - 11.0) / 90.0));
}
