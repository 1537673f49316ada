#include <doctest.h>

#include <vector>

#include "modrec/errors.hpp"
#include "modrec/tokenizer.hpp"
#include "testutil.hpp"

using namespace modrec;

namespace {

// Reference count: walk window starts until the window no longer fits.
std::int64_t enumerate_windows(std::int64_t n, std::int64_t l, std::int64_t w) {
    std::int64_t count = 0;
    for (std::int64_t start = 0; start + l <= n; start += w) ++count;
    return count;
}

std::vector<double> ramp(std::int64_t n, double offset) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (std::int64_t t = 0; t < n; ++t) v[static_cast<std::size_t>(t)] = offset + t;
    return v;
}

// Same-padded 1D convolution of one multi-channel row, straight from the
// definition. `w` is laid out [Co x C x k]; `co` picks the output channel.
std::vector<double> naive_conv_row(const std::vector<double>& x, std::int64_t channels,
                                   std::int64_t len, const std::vector<double>& w,
                                   std::int64_t kernel, double bias_v, std::int64_t co) {
    std::vector<double> out(static_cast<std::size_t>(len), bias_v);
    const std::int64_t half = kernel / 2;
    for (std::int64_t p = 0; p < len; ++p)
        for (std::int64_t c = 0; c < channels; ++c)
            for (std::int64_t kk = 0; kk < kernel; ++kk) {
                const std::int64_t src = p + kk - half;
                if (src < 0 || src >= len) continue;
                out[static_cast<std::size_t>(p)] +=
                    w[static_cast<std::size_t>((co * channels + c) * kernel + kk)] *
                    x[static_cast<std::size_t>(c * len + src)];
            }
    return out;
}

}  // namespace

TEST_CASE("token counts match a sliding-window enumeration") {
    for (const std::int64_t n : {128, 1024}) {
        for (const std::int64_t l : {8, 16, 32, 64}) {
            TokenizerConfig direct;
            direct.strategy = TokenStrategy::Direct;
            direct.l = l;
            CHECK(direct.token_count(n) == enumerate_windows(n, l, l));

            TokenizerConfig overlap;
            overlap.strategy = TokenStrategy::Overlapping;
            overlap.l = l;
            CHECK(overlap.stride() == l / 2);
            CHECK(overlap.token_count(n) == enumerate_windows(n, l, l / 2));

            TokenizerConfig conv;
            conv.strategy = TokenStrategy::ConvIQ;
            conv.l = l;
            CHECK(conv.token_count(n) == enumerate_windows(n, l, l));

            TokenizerConfig cconv;
            cconv.strategy = TokenStrategy::ConvIQComplex;
            cconv.l = l;
            CHECK(cconv.token_count(n) == enumerate_windows(n, l, l));
        }
    }

    // Spot values for the non-overlapping ladder at n = 1024.
    TokenizerConfig cfg;
    cfg.strategy = TokenStrategy::Direct;
    cfg.l = 8;
    CHECK(cfg.token_count(1024) == 128);
    cfg.l = 16;
    CHECK(cfg.token_count(1024) == 64);
    cfg.l = 32;
    CHECK(cfg.token_count(1024) == 32);
    cfg.l = 64;
    CHECK(cfg.token_count(1024) == 16);
}

TEST_CASE("embedding widths follow the strategy") {
    TokenizerConfig cfg;
    cfg.l = 16;
    cfg.nc = 8;
    cfg.strategy = TokenStrategy::Direct;
    CHECK(cfg.embed_dim() == 32);
    cfg.strategy = TokenStrategy::Overlapping;
    CHECK(cfg.embed_dim() == 32);
    cfg.strategy = TokenStrategy::ConvIQ;
    CHECK(cfg.embed_dim() == 128);
    cfg.strategy = TokenStrategy::ConvIQComplex;
    CHECK(cfg.embed_dim() == 256);
}

TEST_CASE("direct segmentation lays out I then Q per row") {
    const std::int64_t n = 12, l = 4;
    const auto i = ramp(n, 0.0), q = ramp(n, 1000.0);
    const Tensor tokens = segment_direct(i.data(), q.data(), n, l);
    REQUIRE(tokens.shape() == Shape{3, 8});
    for (std::int64_t t = 0; t < 3; ++t)
        for (std::int64_t j = 0; j < l; ++j) {
            CHECK(tokens.at(t, j) == static_cast<double>(t * l + j));
            CHECK(tokens.at(t, l + j) == 1000.0 + static_cast<double>(t * l + j));
        }
}

TEST_CASE("overlapping windows advance by the stride") {
    const std::int64_t n = 12, l = 4, w = 2;
    const auto i = ramp(n, 0.0), q = ramp(n, 500.0);
    const Tensor tokens = segment_overlapping(i.data(), q.data(), n, l, w);
    REQUIRE(tokens.shape() == Shape{5, 8});
    for (std::int64_t t = 0; t < 5; ++t) {
        CHECK(tokens.at(t, 0) == static_cast<double>(t * w));
        CHECK(tokens.at(t, l - 1) == static_cast<double>(t * w + l - 1));
        CHECK(tokens.at(t, l) == 500.0 + static_cast<double>(t * w));
    }
}

TEST_CASE("channel segmentation stacks I and Q planes per token") {
    const std::int64_t n = 8, l = 4;
    const auto i = ramp(n, 0.0), q = ramp(n, 100.0);
    const Tensor maps = segment_channels(i.data(), q.data(), n, l);
    REQUIRE(maps.shape() == Shape{2, 2, 4});
    for (std::int64_t t = 0; t < 2; ++t)
        for (std::int64_t j = 0; j < l; ++j) {
            CHECK(maps.data()[static_cast<std::size_t>((t * 2 + 0) * l + j)] ==
                  static_cast<double>(t * l + j));
            CHECK(maps.data()[static_cast<std::size_t>((t * 2 + 1) * l + j)] ==
                  100.0 + static_cast<double>(t * l + j));
        }
}

TEST_CASE("complex segmentation splits real and imaginary planes") {
    const std::int64_t n = 8, l = 4;
    const auto i = ramp(n, 0.0), q = ramp(n, 100.0);
    const auto [re, im] = segment_complex(i.data(), q.data(), n, l);
    REQUIRE(re.shape() == Shape{2, 1, 4});
    REQUIRE(im.shape() == Shape{2, 1, 4});
    CHECK(re.data()[5] == 5.0);
    CHECK(im.data()[5] == 105.0);
}

TEST_CASE("tokenizer geometry is validated") {
    TokenizerConfig cfg;
    cfg.strategy = TokenStrategy::Direct;
    cfg.l = 4;
    CHECK_THROWS_AS(cfg.token_count(10), ConfigError);  // 10 % 4 != 0
    CHECK_THROWS_AS(cfg.token_count(2), ConfigError);   // n < l

    cfg.strategy = TokenStrategy::Overlapping;
    cfg.l = 4;
    cfg.w = 2;
    CHECK_THROWS_AS(cfg.token_count(11), ConfigError);  // (11-4) % 2 != 0
    cfg.w = 5;
    CHECK_THROWS_AS(cfg.token_count(16), ConfigError);  // stride > l

    cfg = TokenizerConfig{};
    cfg.strategy = TokenStrategy::ConvIQ;
    cfg.l = 4;
    cfg.k = 2;
    CHECK_THROWS_AS(cfg.token_count(16), ConfigError);  // even kernel
    cfg.k = 3;
    cfg.nc = 0;
    CHECK_THROWS_AS(cfg.token_count(16), ConfigError);  // no channels

    cfg = TokenizerConfig{};
    cfg.l = 0;
    CHECK_THROWS_AS(cfg.token_count(16), ConfigError);
}

TEST_CASE("a width-1 conv kernel can pick out the I channel") {
    const std::int64_t n = 8, l = 4;
    std::vector<double> i(static_cast<std::size_t>(n)), q(static_cast<std::size_t>(n));
    Rng rng(31);
    for (auto& v : i) v = rng.uniform(0.5, 2.0);  // positive: ReLU transparent
    for (auto& v : q) v = rng.uniform(0.5, 2.0);
    const Tensor maps = segment_channels(i.data(), q.data(), n, l);
    const Tensor weight = Tensor::from_data({1, 2, 1}, {1.0, 0.0});
    const Tensor bias = Tensor::zeros({1});
    const Tensor tokens = conv_frontend(maps, weight, bias);
    REQUIRE(tokens.shape() == Shape{2, 4});
    for (std::int64_t t = 0; t < 2; ++t)
        for (std::int64_t j = 0; j < l; ++j)
            CHECK(tokens.at(t, j) == i[static_cast<std::size_t>(t * l + j)]);
}

TEST_CASE("the conv front end flattens channel-major") {
    const std::int64_t n = 4, l = 2, nc = 2, k = 1;
    const auto iv = ramp(n, 1.0), qv = ramp(n, 10.0);
    const Tensor maps = segment_channels(iv.data(), qv.data(), n, l);
    // Channel 0 copies I, channel 1 copies Q.
    const Tensor weight = Tensor::from_data({nc, 2, k}, {1.0, 0.0, 0.0, 1.0});
    const Tensor bias = Tensor::zeros({nc});
    const Tensor tokens = conv_frontend(maps, weight, bias);
    REQUIRE(tokens.shape() == Shape{2, 4});
    // Row 0: [I0 I1 | Q0 Q1] = [1 2 | 10 11].
    CHECK(tokens.at(0, 0) == 1.0);
    CHECK(tokens.at(0, 1) == 2.0);
    CHECK(tokens.at(0, 2) == 10.0);
    CHECK(tokens.at(0, 3) == 11.0);
}

TEST_CASE("the complex front end matches four real convolutions") {
    const std::int64_t tokens = 40, l = 8, nc = 3, k = 5;
    const std::int64_t n = tokens * l;
    Rng rng(77);
    const auto iv = testutil::random_values(rng, n, -1.0, 1.0);
    const auto qv = testutil::random_values(rng, n, -1.0, 1.0);
    const auto [seg_i, seg_q] = segment_complex(iv.data(), qv.data(), n, l);
    const Tensor wr = Tensor::from_data({nc, 1, k}, testutil::random_values(rng, nc * k, -1.0, 1.0));
    const Tensor wi = Tensor::from_data({nc, 1, k}, testutil::random_values(rng, nc * k, -1.0, 1.0));
    const Tensor br = Tensor::from_data({nc}, testutil::random_values(rng, nc, -0.5, 0.5));
    const Tensor bi = Tensor::from_data({nc}, testutil::random_values(rng, nc, -0.5, 0.5));

    const auto [re, im] = complex_conv_linear(seg_i, seg_q, wr, wi, br, bi);
    REQUIRE(re.shape() == Shape{tokens, nc, l});
    REQUIRE(im.shape() == Shape{tokens, nc, l});

    for (std::int64_t t = 0; t < tokens; ++t) {
        std::vector<double> xi(iv.begin() + t * l, iv.begin() + (t + 1) * l);
        std::vector<double> xq(qv.begin() + t * l, qv.begin() + (t + 1) * l);
        for (std::int64_t c = 0; c < nc; ++c) {
            const auto wr_i = naive_conv_row(xi, 1, l, wr.data(), k, 0.0, c);
            const auto wi_q = naive_conv_row(xq, 1, l, wi.data(), k, 0.0, c);
            const auto wr_q = naive_conv_row(xq, 1, l, wr.data(), k, 0.0, c);
            const auto wi_i = naive_conv_row(xi, 1, l, wi.data(), k, 0.0, c);
            for (std::int64_t p = 0; p < l; ++p) {
                const double expect_re = wr_i[static_cast<std::size_t>(p)] -
                                         wi_q[static_cast<std::size_t>(p)] +
                                         br.data()[static_cast<std::size_t>(c)];
                const double expect_im = wr_q[static_cast<std::size_t>(p)] +
                                         wi_i[static_cast<std::size_t>(p)] +
                                         bi.data()[static_cast<std::size_t>(c)];
                const double got_re = re.data()[static_cast<std::size_t>((t * nc + c) * l + p)];
                const double got_im = im.data()[static_cast<std::size_t>((t * nc + c) * l + p)];
                CHECK(std::abs(got_re - expect_re) < 1e-12);
                CHECK(std::abs(got_im - expect_im) < 1e-12);
            }
        }
    }
}

TEST_CASE("the complex front-end linear map is additive") {
    const std::int64_t n = 32, l = 8, nc = 2, k = 3;
    Rng rng(78);
    const auto a_i = testutil::random_values(rng, n, -1.0, 1.0);
    const auto a_q = testutil::random_values(rng, n, -1.0, 1.0);
    const auto b_i = testutil::random_values(rng, n, -1.0, 1.0);
    const auto b_q = testutil::random_values(rng, n, -1.0, 1.0);
    std::vector<double> s_i(a_i), s_q(a_q);
    for (std::int64_t t = 0; t < n; ++t) {
        s_i[static_cast<std::size_t>(t)] += b_i[static_cast<std::size_t>(t)];
        s_q[static_cast<std::size_t>(t)] += b_q[static_cast<std::size_t>(t)];
    }
    const Tensor wr = Tensor::from_data({nc, 1, k}, testutil::random_values(rng, nc * k, -1.0, 1.0));
    const Tensor wi = Tensor::from_data({nc, 1, k}, testutil::random_values(rng, nc * k, -1.0, 1.0));
    const Tensor zb = Tensor::zeros({nc});

    auto seg = [&](const std::vector<double>& i, const std::vector<double>& q) {
        return segment_complex(i.data(), q.data(), n, l);
    };
    const auto [ar, ai] = complex_conv_linear(seg(a_i, a_q).first, seg(a_i, a_q).second,
                                              wr, wi, zb, zb);
    const auto [brr, bii] = complex_conv_linear(seg(b_i, b_q).first, seg(b_i, b_q).second,
                                                wr, wi, zb, zb);
    const auto [sr, si] = complex_conv_linear(seg(s_i, s_q).first, seg(s_i, s_q).second,
                                              wr, wi, zb, zb);
    for (std::size_t idx = 0; idx < sr.data().size(); ++idx) {
        CHECK(std::abs(sr.data()[idx] - (ar.data()[idx] + brr.data()[idx])) < 1e-12);
        CHECK(std::abs(si.data()[idx] - (ai.data()[idx] + bii.data()[idx])) < 1e-12);
    }
}

TEST_CASE("the complex front end flattens real block then imaginary block") {
    const std::int64_t n = 4, l = 2, nc = 1, k = 1;
    const auto iv = ramp(n, 1.0), qv = ramp(n, 20.0);
    const auto [seg_i, seg_q] = segment_complex(iv.data(), qv.data(), n, l);
    const Tensor wr = Tensor::from_data({nc, 1, k}, {1.0});
    const Tensor wi = Tensor::zeros({nc, 1, k});
    const Tensor zb = Tensor::zeros({nc});
    const Tensor out = complex_conv_frontend(seg_i, seg_q, wr, wi, zb, zb);
    REQUIRE(out.shape() == Shape{2, 4});
    // wi = 0: re = i, im = q; row = [re | im], all positive so ReLU passes.
    CHECK(out.at(0, 0) == 1.0);
    CHECK(out.at(0, 1) == 2.0);
    CHECK(out.at(0, 2) == 20.0);
    CHECK(out.at(0, 3) == 21.0);
}

TEST_CASE("strategy names round trip") {
    for (const auto s : {TokenStrategy::Direct, TokenStrategy::Overlapping,
                         TokenStrategy::ConvIQ, TokenStrategy::ConvIQComplex})
        CHECK(strategy_from_name(strategy_name(s)) == s);
    CHECK_THROWS_AS(strategy_from_name("fourier"), ConfigError);
}

TEST_CASE("tokenizer configs round trip through JSON") {
    TokenizerConfig cfg;
    cfg.strategy = TokenStrategy::Overlapping;
    cfg.l = 32;
    const auto j = cfg.to_json();
    CHECK(j.at("w").get<std::int64_t>() == 16);  // default stride serialized
    const auto back = TokenizerConfig::from_json(j);
    CHECK(back.strategy == cfg.strategy);
    CHECK(back.l == 32);
    CHECK(back.stride() == 16);

    TokenizerConfig conv;
    conv.strategy = TokenStrategy::ConvIQComplex;
    conv.l = 16;
    conv.nc = 4;
    conv.k = 5;
    const auto back2 = TokenizerConfig::from_json(conv.to_json());
    CHECK(back2.nc == 4);
    CHECK(back2.k == 5);
    CHECK(back2.embed_dim() == 2 * 16 * 4);

    CHECK_THROWS_AS(TokenizerConfig::from_json(nlohmann::json{{"l", 8}}), ConfigError);
}
