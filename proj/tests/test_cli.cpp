// Copyright 2026 The lflctr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "lfl/cli.hpp"

using namespace lfl;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("lflctr_test_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

const char* small_synth =
    "banners = 10\ndomains = 8\norder = 2\ndays = 8\nevents_per_day = 3000\nattributes = 3\n"
    "attribute_values = 4\n";

int run_cli(const std::string& args) {
    const char* bin = std::getenv("LFLCTR_BIN");
    REQUIRE(bin != nullptr);
    const int status = std::system((std::string(bin) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// A synthesized corpus shared by the train and evaluate cases.
struct Corpus {
    fs::path dir;
    Corpus() : dir(fresh_dir("corpus")) {
        write_file(dir / "synth.cfg", small_synth);
        SynthCommand s;
        s.config = (dir / "synth.cfg").string();
        s.out_dir = (dir / "logs").string();
        run_synth(s);
        fs::create_directories(dir / "test");
        fs::rename(dir / "logs" / "day_7.tsv", dir / "test" / "day_7.tsv");
    }
};

}  // namespace

TEST_CASE("synth writes one file per day plus the generating model") {
    const fs::path dir = fresh_dir("synth");
    write_file(dir / "synth.cfg", small_synth);
    SynthCommand cmd;
    cmd.config = (dir / "synth.cfg").string();
    cmd.out_dir = (dir / "a").string();
    const auto written = run_synth(cmd);
    CHECK(written.size() == 9);
    for (int d = 0; d < 8; ++d) CHECK(fs::exists(dir / "a" / ("day_" + std::to_string(d) + ".tsv")));
    CHECK(fs::exists(dir / "a" / "truth.model"));

    cmd.out_dir = (dir / "b").string();
    run_synth(cmd);
    for (const auto& entry : fs::directory_iterator(dir / "a")) {
        CHECK(read_file(entry.path()) == read_file(dir / "b" / entry.path().filename()));
    }
    cmd.out_dir = (dir / "c").string();
    cmd.seed = 99;
    run_synth(cmd);
    CHECK(read_file(dir / "a" / "day_0.tsv") != read_file(dir / "c" / "day_0.tsv"));
}

TEST_CASE("synth rejects unknown config keys by name") {
    const fs::path dir = fresh_dir("synth_bad");
    write_file(dir / "synth.cfg", "banners = 4\nevents_per_dy = 10\n");
    SynthCommand cmd;
    cmd.config = (dir / "synth.cfg").string();
    cmd.out_dir = (dir / "out").string();
    try {
        run_synth(cmd);
        FAIL("expected an error");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("events_per_dy") != std::string::npos);
    }
}

TEST_CASE("training configs pick the family from the order key") {
    std::istringstream lr("lambda_lr = 2\n");
    const auto a = TrainingConfig::from_config(KeyValueConfig::parse(lr));
    CHECK(a.family == ModelFamily::kLR);
    CHECK(a.hyper.lambda_lr == 2.0);
    std::istringstream both("order = 4\ndownsample = 5\n");
    const auto b = TrainingConfig::from_config(KeyValueConfig::parse(both));
    CHECK(b.family == ModelFamily::kLRLFL);
    CHECK(b.hyper.order == 4);
    CHECK(b.downsample == 5.0);
    std::istringstream lfl("family = LFL\norder = 3\n");
    CHECK(TrainingConfig::from_config(KeyValueConfig::parse(lfl)).family == ModelFamily::kLFL);
    std::istringstream bad("lambda = 1\n");
    CHECK_THROWS_AS(TrainingConfig::from_config(KeyValueConfig::parse(bad)), std::invalid_argument);
}

TEST_CASE("input expansion") {
    const fs::path dir = fresh_dir("expand");
    write_file(dir / "b.tsv", "");
    write_file(dir / "a.tsv.gz", "");
    write_file(dir / "notes.txt", "");
    const auto from_dir = expand_inputs(dir.string());
    REQUIRE(from_dir.size() == 2);
    CHECK(fs::path(from_dir[0]).filename() == "a.tsv.gz");
    CHECK(fs::path(from_dir[1]).filename() == "b.tsv");
    CHECK(expand_inputs((dir / "*.txt").string()).size() == 1);
    try {
        expand_inputs((dir / "*.csv").string());
        FAIL("expected an error");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("*.csv") != std::string::npos);
    }
}

TEST_CASE("train, warm start and evaluate") {
    Corpus corpus;
    const fs::path& dir = corpus.dir;

    SUBCASE("LR without an order has no factors") {
        write_file(dir / "lr.cfg", "lambda_lr = 4\n");
        TrainCommand t;
        t.data = (dir / "logs").string();
        t.hyper = (dir / "lr.cfg").string();
        t.out = (dir / "lr.model").string();
        const ModelFile m = run_train(t);
        CHECK(m.model.family == ModelFamily::kLR);
        CHECK(m.model.factors.empty());
        CHECK(fs::exists(dir / "lr.model"));
    }

    SUBCASE("warm start runs one alternation and evaluation writes both CSVs") {
        write_file(dir / "lfl.cfg", "order = 2\n");
        TrainCommand t;
        t.data = (dir / "logs" / "day_[0-5].tsv").string();
        t.hyper = (dir / "lfl.cfg").string();
        t.out = (dir / "cold.model").string();
        const ModelFile cold = run_train(t);
        CHECK(cold.model.alternations_run == 7);
        t.data = (dir / "logs" / "day_6.tsv").string();
        t.hyper.clear();
        t.warm_start = (dir / "cold.model").string();
        t.out = (dir / "warm.model").string();
        const ModelFile warm = run_train(t);
        CHECK(warm.model.alternations_run == 1);
        CHECK(warm.model.family == ModelFamily::kLRLFL);

        write_file(dir / "lr.cfg", "lambda_lr = 4\n");
        TrainCommand b;
        b.data = (dir / "logs").string();
        b.hyper = (dir / "lr.cfg").string();
        b.out = (dir / "lr.model").string();
        run_train(b);

        EvaluateCommand e;
        e.model = (dir / "warm.model").string();
        e.baseline = (dir / "lr.model").string();
        e.data = (dir / "test").string();
        e.out_dir = (dir / "eval").string();
        run_evaluate(e);
        const auto summary = lines(read_file(dir / "eval" / "summary.csv"));
        std::size_t day_rows = 0;
        for (std::size_t n = 1; n < summary.size(); ++n) {
            if (summary[n].rfind("7,", 0) != 0) continue;
            ++day_rows;
            // day,model_id,filter,mean_auc,mean_logloss,delta_auc,delta_logloss,...
            std::istringstream cells(summary[n]);
            std::vector<std::string> c;
            for (std::string v; std::getline(cells, v, ',');) c.push_back(v);
            REQUIRE(c.size() >= 7);
            CHECK(c[1] == "warm");
            CHECK_FALSE(c[5].empty());
            CHECK_FALSE(c[6].empty());
        }
        CHECK(day_rows == 2);
        const auto metrics = lines(read_file(dir / "eval" / "metrics.csv"));
        CHECK(metrics.at(0) == "day,banner_id,n_clicks,n_views,auc,logloss,model_id");
        CHECK(metrics.size() > 1);
    }

    SUBCASE("missing inputs name the pattern") {
        TrainCommand t;
        t.data = (dir / "nothing_*.tsv").string();
        t.out = (dir / "x.model").string();
        try {
            run_train(t);
            FAIL("expected an error");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find("nothing_*.tsv") != std::string::npos);
        }
    }

    SUBCASE("an empty test file is an error") {
        write_file(dir / "lr.cfg", "lambda_lr = 4\n");
        TrainCommand t;
        t.data = (dir / "logs").string();
        t.hyper = (dir / "lr.cfg").string();
        t.out = (dir / "lr.model").string();
        run_train(t);
        write_file(dir / "empty.tsv", "");
        EvaluateCommand e;
        e.model = t.out;
        e.data = (dir / "empty.tsv").string();
        e.out_dir = (dir / "eval_empty").string();
        CHECK_THROWS_AS(run_evaluate(e), DataError);
    }
}

TEST_CASE("executable exit codes") {
    const fs::path dir = fresh_dir("exit");
    CHECK(run_cli("") == 1);
    CHECK(run_cli("--help") == 0);
    CHECK(run_cli("frobnicate") == 1);
    CHECK(run_cli("train --data " + (dir / "none_*.tsv").string() + " --out " + (dir / "m").string()) == 2);
    write_file(dir / "bad.cfg", "bogus = 1\n");
    CHECK(run_cli("synth " + (dir / "bad.cfg").string() + " --out " + (dir / "s").string()) == 1);
    write_file(dir / "ok.cfg", "banners = 3\ndomains = 3\ndays = 1\nevents_per_day = 200\n");
    CHECK(run_cli("synth " + (dir / "ok.cfg").string() + " --out " + (dir / "s").string()) == 0);
    CHECK(fs::exists(dir / "s" / "day_0.tsv"));
}
