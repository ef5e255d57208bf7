#include "lampsde/error_lab.hpp"
#include "lampsde/mc_kernels.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <stdexcept>

using namespace lampsde;

TEST(McKernels, SerialAndOpenMpEndpointsAreBitIdentical) {
    TransformedModel tm = transform(ModelSpec::with_default_start(WrightFisherParams{}));
    GridSpec g = GridSpec::make(1.0, 0x1p-7);
    auto serial = mc::bem_endpoints(tm, g, 4, 300, {}, mc::Backend::Serial);
    for (int w : {1, 2, 3, 8}) EXPECT_EQ(mc::bem_endpoints(tm, g, 4, 300, {}, mc::Backend::OpenMP, w), serial);
}

TEST(McKernels, EveryPathVisitedOnce) {
    std::vector<std::atomic<int>> hits(1000);
    mc::for_each_path_omp(1000, 4, [&](std::size_t i) { hits[i]++; });
    for (auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(McKernels, LowestIndexExceptionWins) {
    auto body = [](std::size_t i) {
        if (i == 17 || i == 400) throw std::runtime_error("path " + std::to_string(i));
    };
    try {
        mc::for_each_path_omp(1000, 4, body);
        FAIL();
    } catch (const std::runtime_error& e) {
        EXPECT_STREQ(e.what(), "path 17");
    }
}

TEST(McKernels, OrderedReductionSeesPathOrder) {
    std::vector<std::size_t> order;
    mc::map_reduce_ordered<std::size_t>(
        1000, 4, [](std::size_t i) { return i * i; },
        [&](std::size_t i, std::size_t v) {
            EXPECT_EQ(v, i * i);
            order.push_back(i);
        },
        64);
    ASSERT_EQ(order.size(), 1000u);
    for (std::size_t i = 0; i < order.size(); ++i) EXPECT_EQ(order[i], i);
}

TEST(McKernels, ErrorEstimateIndependentOfWorkers) {
    auto spec = ModelSpec::with_default_start(CIRParams{});
    MonteCarloOptions o;
    o.n_paths = 300;
    o.stream = 8;
    std::vector<double> ladder = {0x1p-6, 0x1p-5, 0x1p-4};
    o.workers = 1;
    auto a = estimate_strong_error_ladder(spec, SchemeId::Lbe, ladder, 0x1p-9, ErrorMetric::MaxGridLp, 2.0, o);
    o.workers = 5;
    auto b = estimate_strong_error_ladder(spec, SchemeId::Lbe, ladder, 0x1p-9, ErrorMetric::MaxGridLp, 2.0, o);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].value, b[i].value);
        EXPECT_EQ(a[i].std_error, b[i].std_error);
    }
}
