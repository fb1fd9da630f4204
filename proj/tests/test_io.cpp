// Copyright 2026 The rydotoc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <filesystem>

#include "rydotoc/experiment_config.hpp"
#include "rydotoc/manifest.hpp"
#include "rydotoc/series_io.hpp"

namespace rydotoc {
namespace {

const std::filesystem::path kPresets = RYDOTOC_PRESET_DIR;

const char* kMinimal = R"({
  "name": "tiny",
  "geometry": {"chain": {"n_atoms": 3, "spacing_um": 9.5}},
  "drive": {"omega_2pi_MHz": 2.5, "delta_2pi_MHz": 1.5, "duration_us": 1.0},
  "butterfly": {"site": 3},
  "times": {"start_us": 0.0, "stop_us": 1.0, "step_us": 0.5},
  "n_instances": 4,
  "seed": 9
})";

TEST(Io, SeriesRoundTrip) {
    OtocSeries s = OtocSeries::zeros(2, {0.0, 0.1, 0.2});
    s.otoc[1][2] = -0.123456789012345;
    s.raw[0][1] = 0.25;
    s.norm[0][1] = 0.5;
    s.stderr_otoc[1][0] = 1e-17;
    s.config_hash = "abcd";
    s.seed = 42;
    s.n_instances = 7;
    const std::string text = series_to_csv(s);
    EXPECT_EQ(text.rfind("# rydotoc otoc_series v1", 0), 0u);
    const OtocSeries r = series_from_csv(text);
    EXPECT_EQ(r.n_sites, 2);
    EXPECT_EQ(r.times, s.times);
    EXPECT_EQ(r.otoc, s.otoc);
    EXPECT_EQ(r.raw, s.raw);
    EXPECT_EQ(r.norm, s.norm);
    EXPECT_EQ(r.stderr_otoc, s.stderr_otoc);
    EXPECT_EQ(r.config_hash, "abcd");
    EXPECT_EQ(r.seed, 42u);
    EXPECT_EQ(series_to_csv(r), text);
}

TEST(Io, SeriesSchemaChecks) {
    const std::string good = series_to_csv(OtocSeries::zeros(2, {0.0, 0.5}));
    EXPECT_THROW(series_from_csv("site,t,raw,norm,otoc,stderr\n1,0,0,0,0,0\n"), SchemaError);
    std::string wrong_version = good;
    wrong_version.replace(wrong_version.find(" v1"), 3, " v9");
    EXPECT_THROW(series_from_csv(wrong_version), SchemaError);
    std::string wrong_schema = good;
    wrong_schema.replace(wrong_schema.find("otoc_series"), 11, "m2_scan");
    EXPECT_THROW(series_from_csv(wrong_schema), SchemaError);
    // drop the last data row: incomplete grid
    std::string truncated = good.substr(0, good.rfind('\n', good.size() - 2) + 1);
    EXPECT_THROW(series_from_csv(truncated), SchemaError);
    // drop the whole second site: a full grid, but not the declared one
    std::string one_site = good.substr(0, good.find("\n2,") + 1);
    EXPECT_THROW(series_from_csv(one_site), SchemaError);
    const CsvHeader h = parse_csv_header("# rydotoc heatmap v1 a=1 b=x");
    EXPECT_EQ(h.schema, "heatmap");
    EXPECT_EQ(h.version, 1);
    EXPECT_EQ(h.meta.at("b"), "x");
}

TEST(Io, AtomicWrite) {
    const auto dir = std::filesystem::temp_directory_path() / "rydotoc_io_test";
    std::filesystem::create_directories(dir);
    write_text_file(dir / "a.txt", "hello\n");
    EXPECT_EQ(read_text_file(dir / "a.txt"), "hello\n");
    write_text_file(dir / "a.txt", "again\n");
    EXPECT_EQ(read_text_file(dir / "a.txt"), "again\n");
    EXPECT_THROW(read_text_file(dir / "missing.txt"), std::runtime_error);
    std::filesystem::remove_all(dir);
}

TEST(Io, Sha256KnownVectors) {
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Config, MinimalDocumentParses) {
    const ExperimentConfig c = parse_experiment_config(kMinimal);
    EXPECT_EQ(c.experiment.geometry.n_atoms(), 3);
    EXPECT_EQ(c.experiment.butterfly.site, 2);
    EXPECT_EQ(c.reference_site(), 2);
    EXPECT_NEAR(c.experiment.drive.total_time, 1.0, 1e-15);
    EXPECT_EQ(c.experiment.times.size(), 3u);
    EXPECT_EQ(c.hash().size(), 16u);
    EXPECT_EQ(c.hash(), parse_experiment_config(kMinimal).hash());
}

TEST(Config, HashIgnoresWorkersButNotSeed) {
    nlohmann::json j = nlohmann::json::parse(kMinimal);
    const std::string base = parse_experiment_config(j.dump()).hash();
    j["workers"] = 8;
    j["out_dir"] = "/tmp/elsewhere";
    EXPECT_EQ(parse_experiment_config(j.dump()).hash(), base);
    j["seed"] = 10;
    EXPECT_NE(parse_experiment_config(j.dump()).hash(), base);
}

TEST(Config, MalformedJsonReportsPosition) {
    try {
        parse_experiment_config("{\n  \"name\": \"x\",\n  \"seed\": ,\n}");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
        EXPECT_NE(msg.find("column"), std::string::npos) << msg;
    }
}

TEST(Config, RejectsInvalidDocuments) {
    auto with = [](const char* key, nlohmann::json value) {
        nlohmann::json j = nlohmann::json::parse(kMinimal);
        j[key] = std::move(value);
        return j.dump();
    };
    EXPECT_THROW(parse_experiment_config(with("bogus", 1)), ConfigError);
    EXPECT_THROW(parse_experiment_config(with("n_instances", 1)), ConfigError);
    EXPECT_THROW(parse_experiment_config(with("noise_preset", "appB")), ConfigError);
    EXPECT_THROW(parse_experiment_config(with("butterfly", {{"site", 4}})), ConfigError);
    EXPECT_THROW(parse_experiment_config(with("butterfly", {{"site", 0}})), ConfigError);
    EXPECT_THROW(parse_experiment_config(with("times", {0.0, 2.0})), ConfigError);
    EXPECT_THROW(parse_experiment_config(with("geometry", {{"chain", {{"n_atoms", 13}, {"spacing_um", 9.5}}}})),
                 ConfigError);
    EXPECT_THROW(parse_experiment_config(
                     with("drive", {{"omega_2pi_MHz", 5.0}, {"delta_2pi_MHz", 0.0}, {"duration_us", 1.0}})),
                 ConfigError);
    EXPECT_THROW(parse_experiment_config("[1, 2]"), ConfigError);
}

TEST(Config, NoisePresets) {
    ExperimentConfig c = parse_experiment_config(kMinimal);
    EXPECT_FALSE(c.experiment.noise.has_value());
    c.set_noise_preset("appA_high");
    ASSERT_TRUE(c.experiment.noise.has_value());
    const std::string high = c.hash();
    c.set_noise_preset("appA_low");
    EXPECT_NE(c.hash(), high);
    c.set_noise_preset("none");
    EXPECT_FALSE(c.experiment.noise.has_value());
    EXPECT_THROW(c.set_noise_preset("loud"), ConfigError);
}

TEST(Config, AllPresetsValidate) {
    int count = 0;
    for (const auto& entry : std::filesystem::directory_iterator(kPresets)) {
        if (entry.path().extension() != ".json") continue;
        SCOPED_TRACE(entry.path().string());
        const ExperimentConfig c = load_experiment_config(entry.path().string(), kPresets);
        EXPECT_NO_THROW(c.validate());
        EXPECT_EQ(c.experiment.butterfly.phi, kPi);
        ++count;
    }
    EXPECT_GE(count, 6);
    const ExperimentConfig f = load_experiment_config("fiducial", kPresets);
    EXPECT_EQ(f.experiment.geometry.n_atoms(), 8);
    EXPECT_EQ(f.experiment.n_instances, 200u);
    EXPECT_THROW(load_experiment_config("no-such-preset", kPresets), ConfigError);
}

TEST(Config, UniformGrid) {
    const auto g = uniform_grid(0.0, 4.0, 0.1);
    EXPECT_EQ(g.size(), 41u);
    EXPECT_DOUBLE_EQ(g.back(), 4.0);
    EXPECT_THROW(uniform_grid(0.0, 1.0, 0.0), std::invalid_argument);
}

}  // namespace
}  // namespace rydotoc
