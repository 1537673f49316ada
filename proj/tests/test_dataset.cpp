#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>

#include "modrec/dataset.hpp"
#include "modrec/errors.hpp"
#include "modrec/framegen.hpp"

using namespace modrec;

namespace {

std::string temp_path(const std::string& tag) {
    const auto dir = std::filesystem::temp_directory_path() / "modrec-tests";
    std::filesystem::create_directories(dir);
    return (dir / (tag + ".bin")).string();
}

std::vector<unsigned char> read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::string& path, const std::vector<unsigned char>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

DatasetSpec small_spec() {
    DatasetSpec spec;
    spec.n = 64;
    spec.frames = 12;
    spec.classes = {ModulationScheme::BPSK, ModulationScheme::QPSK};
    spec.snr = SnrSpec::grid(0.0, 10.0, 10.0);
    spec.seed = 77;
    return spec;
}

}  // namespace

TEST_CASE("generated frames have unit mean power") {
    const PulseConfig pulse;
    for (const auto scheme : {ModulationScheme::QPSK, ModulationScheme::QAM64,
                              ModulationScheme::CPFSK}) {
        const auto frame = generate_frame(scheme, 5.0, ChannelConfig::identity(),
                                          pulse, 256, 42);
        double power = 0.0;
        for (std::size_t t = 0; t < frame.i.size(); ++t)
            power += frame.i[t] * frame.i[t] + frame.q[t] * frame.q[t];
        power /= static_cast<double>(frame.i.size());
        CHECK(power == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("frame generation is deterministic in the seed") {
    const PulseConfig pulse;
    ChannelConfig chan;
    chan.cfo = 0.01;
    chan.num_taps = 2;
    chan.delay_spread = 4.0;
    const auto a = generate_frame(ModulationScheme::QAM16, 8.0, chan, pulse, 128, 9001);
    const auto b = generate_frame(ModulationScheme::QAM16, 8.0, chan, pulse, 128, 9001);
    CHECK(a.i == b.i);
    CHECK(a.q == b.q);
    const auto c = generate_frame(ModulationScheme::QAM16, 8.0, chan, pulse, 128, 9002);
    CHECK(a.i != c.i);
}

TEST_CASE("clean-path frames equal the normalized clean waveform") {
    const PulseConfig pulse;
    const std::int64_t n = 128;
    const std::uint64_t seed = 555;
    const auto frame = generate_frame(ModulationScheme::PSK8,
                                      std::numeric_limits<double>::infinity(),
                                      ChannelConfig::identity(), pulse, n, seed);
    Rng rng(seed);
    const auto wave = clean_waveform(ModulationScheme::PSK8, pulse, n, rng);
    double power = 0.0;
    for (const auto& v : wave) power += std::norm(v);
    power /= static_cast<double>(wave.size());
    const double scale = 1.0 / std::sqrt(power);
    for (std::int64_t t = 0; t < n; ++t) {
        CHECK(frame.i[static_cast<std::size_t>(t)] ==
              wave[static_cast<std::size_t>(t)].real() * scale);
        CHECK(frame.q[static_cast<std::size_t>(t)] ==
              wave[static_cast<std::size_t>(t)].imag() * scale);
    }
}

TEST_CASE("dataset files round-trip through the loader") {
    const auto spec = small_spec();
    const auto path = temp_path("roundtrip");
    generate_dataset(spec, path);
    const Dataset ds = Dataset::load(path);

    CHECK(ds.size() == spec.frames);
    CHECK(ds.frame_len() == spec.n);
    CHECK(ds.num_classes() == 2);
    CHECK(ds.class_names()[0] == "bpsk");
    CHECK(ds.class_names()[1] == "qpsk");
    CHECK(ds.header().at("seed").get<std::uint64_t>() == spec.seed);

    const auto grid = spec.snr.grid_values();
    for (std::int64_t idx = 0; idx < ds.size(); ++idx) {
        CHECK(ds.label(idx) == static_cast<int>(idx % 2));
        const double expect_snr = grid[static_cast<std::size_t>((idx / 2) % 2)];
        CHECK(ds.snr_db(idx) == doctest::Approx(expect_snr));
        const auto frame = generate_frame(record_scheme(spec, idx), record_snr(spec, idx),
                                          spec.channel, spec.pulse, spec.n,
                                          record_seed(spec, idx));
        for (std::int64_t t = 0; t < spec.n; ++t) {
            CHECK(ds.frame_i(idx)[t] ==
                  static_cast<float>(frame.i[static_cast<std::size_t>(t)]));
            CHECK(ds.frame_q(idx)[t] ==
                  static_cast<float>(frame.q[static_cast<std::size_t>(t)]));
        }
    }
}

TEST_CASE("regeneration is byte-identical across thread counts") {
    auto spec = small_spec();
    spec.frames = 24;
    spec.channel.num_taps = 2;
    spec.channel.delay_spread = 3.0;
    spec.channel.max_doppler = 0.005;
    const auto path1 = temp_path("bytes-threads-1");
    const auto path3 = temp_path("bytes-threads-3");
    setenv("MODREC_THREADS", "1", 1);
    generate_dataset(spec, path1);
    setenv("MODREC_THREADS", "3", 1);
    generate_dataset(spec, path3);
    unsetenv("MODREC_THREADS");
    CHECK(read_bytes(path1) == read_bytes(path3));
}

TEST_CASE("log-normal SNR assignment clamps and reproduces") {
    auto spec = small_spec();
    spec.snr = SnrSpec::log_normal(5.0, 3.0, 2.0, 8.0);
    for (std::int64_t idx = 0; idx < spec.frames; ++idx) {
        const double a = record_snr(spec, idx);
        const double b = record_snr(spec, idx);
        CHECK(a == b);
        CHECK(a >= 2.0);
        CHECK(a <= 8.0);
    }
}

TEST_CASE("dataset specs validate shape and class list") {
    auto spec = small_spec();
    spec.frames = 7;  // not a multiple of 2 classes
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec = small_spec();
    spec.classes = {ModulationScheme::BPSK, ModulationScheme::BPSK};
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec = small_spec();
    spec.n = 0;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec = small_spec();
    spec.classes.clear();
    CHECK_THROWS_AS(spec.validate(), ConfigError);
}

TEST_CASE("dataset spec JSON round-trips") {
    auto spec = small_spec();
    spec.channel.cfo = 0.02;
    spec.pulse.rolloff = 0.5;
    const auto j = spec.to_json();
    const auto back = DatasetSpec::from_json(j);
    CHECK(back.n == spec.n);
    CHECK(back.frames == spec.frames);
    CHECK(back.classes == spec.classes);
    CHECK(back.seed == spec.seed);
    CHECK(back.channel.cfo == spec.channel.cfo);
    CHECK(back.pulse.rolloff == spec.pulse.rolloff);
    CHECK(back.snr.mode == SnrSpec::Mode::Grid);
    CHECK(back.snr.stop == 10.0);
}

TEST_CASE("the loader rejects corrupt files") {
    const auto spec = small_spec();
    const auto path = temp_path("corrupt-src");
    generate_dataset(spec, path);
    const auto bytes = read_bytes(path);

    const auto truncated = temp_path("corrupt-truncated");
    write_bytes(truncated, {bytes.begin(), bytes.end() - 3});
    CHECK_THROWS_AS(Dataset::load(truncated), DataError);

    const auto trailing = temp_path("corrupt-trailing");
    auto padded = bytes;
    padded.push_back(0);
    write_bytes(trailing, padded);
    CHECK_THROWS_AS(Dataset::load(trailing), DataError);

    const auto bad_label = temp_path("corrupt-label");
    auto patched = bytes;
    const auto header_len =
        static_cast<std::size_t>(std::find(bytes.begin(), bytes.end(), '\n') -
                                 bytes.begin()) + 1;
    patched[header_len + static_cast<std::size_t>(8 * spec.n)] = 9;  // only 2 classes
    write_bytes(bad_label, patched);
    CHECK_THROWS_AS(Dataset::load(bad_label), DataError);

    CHECK_THROWS_AS(Dataset::load(temp_path("does-not-exist")), DataError);

    const auto bad_header = temp_path("corrupt-header");
    std::vector<unsigned char> garbage = {'n', 'o', 'p', 'e', '\n'};
    write_bytes(bad_header, garbage);
    CHECK_THROWS_AS(Dataset::load(bad_header), DataError);
}

TEST_CASE("splits follow the 60/20/20 largest-remainder rule") {
    DatasetSpec spec;
    spec.n = 8;
    spec.frames = 101;
    spec.classes = {ModulationScheme::BPSK};
    spec.snr = SnrSpec::grid(0.0, 0.0, 1.0);
    spec.seed = 3;
    const auto path = temp_path("split-101");
    generate_dataset(spec, path);
    const Dataset ds = Dataset::load(path);

    const Splits splits = split_dataset(ds, 11);
    CHECK(splits.train.size() == 61);  // 60.6 -> train takes the leftover
    CHECK(splits.val.size() == 20);
    CHECK(splits.test.size() == 20);

    std::set<std::int64_t> seen;
    for (const auto* view : {&splits.train, &splits.val, &splits.test})
        for (const auto idx : view->indices) {
            CHECK(idx >= 0);
            CHECK(idx < ds.size());
            CHECK(seen.insert(idx).second);  // disjoint
        }
    CHECK(seen.size() == 101u);  // exhaustive
}

TEST_CASE("splits are deterministic in the seed") {
    const auto spec = small_spec();
    const auto path = temp_path("split-det");
    generate_dataset(spec, path);
    const Dataset ds = Dataset::load(path);
    const Splits a = split_dataset(ds, 5);
    const Splits b = split_dataset(ds, 5);
    CHECK(a.train.indices == b.train.indices);
    CHECK(a.val.indices == b.val.indices);
    CHECK(a.test.indices == b.test.indices);
    const Splits c = split_dataset(ds, 6);
    CHECK(a.train.indices != c.train.indices);
}

TEST_CASE("stratified splits balance every class") {
    DatasetSpec spec;
    spec.n = 8;
    spec.frames = 40;
    spec.classes = {ModulationScheme::BPSK, ModulationScheme::QPSK,
                    ModulationScheme::PSK8, ModulationScheme::QAM16};
    spec.snr = SnrSpec::grid(10.0, 10.0, 1.0);
    spec.seed = 8;
    const auto path = temp_path("split-strat");
    generate_dataset(spec, path);
    const Dataset ds = Dataset::load(path);

    const Splits splits = split_dataset(ds, 21, /*stratified=*/true);
    CHECK(splits.train.size() == 24);
    CHECK(splits.val.size() == 8);
    CHECK(splits.test.size() == 8);
    for (const auto* view : {&splits.train, &splits.val, &splits.test}) {
        std::array<int, 4> counts{};
        for (const auto idx : view->indices) ++counts[static_cast<std::size_t>(ds.label(idx))];
        for (const int c : counts) CHECK(c == view->size() / 4);
    }
}

TEST_CASE("tiny datasets refuse to split") {
    DatasetSpec spec;
    spec.n = 8;
    spec.frames = 4;
    spec.classes = {ModulationScheme::BPSK};
    spec.snr = SnrSpec::grid(0.0, 0.0, 1.0);
    const auto path = temp_path("split-tiny");
    generate_dataset(spec, path);
    const Dataset ds = Dataset::load(path);
    CHECK_THROWS_AS(split_dataset(ds, 1), ConfigError);
}

TEST_CASE("split manifests round-trip exactly") {
    const auto spec = small_spec();
    const auto path = temp_path("manifest");
    generate_dataset(spec, path);
    const Dataset ds = Dataset::load(path);
    const Splits splits = split_dataset(ds, 33);

    const auto manifest = split_manifest(splits);
    const Splits back = splits_from_manifest(ds, manifest);
    CHECK(back.train.indices == splits.train.indices);
    CHECK(back.val.indices == splits.val.indices);
    CHECK(back.test.indices == splits.test.indices);

    auto missing = manifest;
    missing.erase("val");
    CHECK_THROWS_AS(splits_from_manifest(ds, missing), DataError);

    auto out_of_range = manifest;
    out_of_range["test"].push_back(ds.size());
    CHECK_THROWS_AS(splits_from_manifest(ds, out_of_range), DataError);
}

TEST_CASE("batch streams cover a view exactly once per epoch") {
    const auto spec = small_spec();
    const auto path = temp_path("batches");
    generate_dataset(spec, path);
    const Dataset ds = Dataset::load(path);
    DatasetView view{&ds, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}};

    BatchStream stream(view, 3, 900);
    CHECK(stream.batch_count() == 4);
    Batch batch;
    std::vector<std::int64_t> seen;
    std::vector<std::int64_t> sizes;
    while (stream.next(batch)) {
        sizes.push_back(static_cast<std::int64_t>(batch.indices.size()));
        for (std::size_t k = 0; k < batch.indices.size(); ++k) {
            seen.push_back(batch.indices[k]);
            CHECK(batch.labels[k] == ds.label(batch.indices[k]));
        }
    }
    CHECK(sizes == std::vector<std::int64_t>{3, 3, 3, 1});
    std::sort(seen.begin(), seen.end());
    CHECK(seen == view.indices);

    // Same epoch seed replays the same order; a different seed reshuffles.
    BatchStream again(view, 3, 900);
    Batch first_a, first_b;
    again.next(first_a);
    BatchStream other(view, 3, 901);
    other.next(first_b);
    BatchStream replay(view, 3, 900);
    Batch first_c;
    replay.next(first_c);
    CHECK(first_a.indices == first_c.indices);
    CHECK(first_a.indices != first_b.indices);
}

TEST_CASE("SNR partitions use half-open bins with overflow") {
    const auto spec = small_spec();  // SNRs alternate 0 and 10 dB by pair
    const auto path = temp_path("snrbins");
    generate_dataset(spec, path);
    const Dataset ds = Dataset::load(path);
    DatasetView view{&ds, {}};
    for (std::int64_t i = 0; i < ds.size(); ++i) view.indices.push_back(i);

    const auto part = partition_by_snr(view, {-5.0, 5.0, 10.0});
    REQUIRE(part.bins.size() == 2);
    CHECK(part.bins[0].lo == -5.0);
    CHECK(part.bins[0].hi == 5.0);
    // 0 dB records land in [-5, 5); 10 dB records sit on the open upper edge.
    std::int64_t zero_count = 0, ten_count = 0;
    for (std::int64_t i = 0; i < ds.size(); ++i)
        (ds.snr_db(i) < 5.0 ? zero_count : ten_count) += 1;
    CHECK(static_cast<std::int64_t>(part.bins[0].indices.size()) == zero_count);
    CHECK(part.bins[1].indices.empty());
    CHECK(static_cast<std::int64_t>(part.overflow.size()) == ten_count);

    const auto part2 = partition_by_snr(view, {-5.0, 5.0, 10.5});
    CHECK(static_cast<std::int64_t>(part2.bins[1].indices.size()) == ten_count);
    CHECK(part2.overflow.empty());

    CHECK_THROWS_AS(partition_by_snr(view, {1.0}), ConfigError);
    CHECK_THROWS_AS(partition_by_snr(view, {1.0, 1.0}), ConfigError);
    CHECK_THROWS_AS(partition_by_snr(view, {2.0, 1.0}), ConfigError);
}
