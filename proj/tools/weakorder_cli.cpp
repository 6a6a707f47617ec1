// Copyright 2026 The weakorder Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "weakorder/presets.hpp"
#include "weakorder/runner.hpp"

namespace wr = weakorder::runner;

namespace {

int do_validate(const std::string &path) {
    try {
        const auto cfg = wr::parse_config(wr::load_json_file(path));
        std::printf("ok: %s (%s)\n", path.c_str(), cfg.experiment.c_str());
        return wr::kExitOk;
    } catch (const weakorder::Error &e) {
        std::fprintf(stderr, "ConfigInvalid: %s\n", e.what());
        return wr::kExitConfigInvalid;
    }
}

int do_run(const std::string &path, const std::string &out_dir, std::optional<std::uint64_t> seed) {
    wr::ExperimentConfig cfg;
    try {
        cfg = wr::parse_config(wr::load_json_file(path));
    } catch (const weakorder::Error &e) {
        std::fprintf(stderr, "ConfigInvalid: %s\n", e.what());
        return wr::kExitConfigInvalid;
    }
    const auto result = wr::run(std::move(cfg), seed);
    wr::write_outputs(result, out_dir);
    const std::string status = result.summary.value("status", "");
    std::printf("%s: %s -> %s\n", status.c_str(), path.c_str(), out_dir.c_str());
    if (result.exit_code == wr::kExitNumericalFailure) {
        std::fprintf(stderr, "%s: %s\n", result.summary["error"]["name"].get<std::string>().c_str(),
                     result.summary["error"]["message"].get<std::string>().c_str());
    }
    return result.exit_code;
}

int do_list(const std::string &show) {
    if (show.empty()) {
        std::fputs(weakorder::presets::listing().c_str(), stdout);
        return wr::kExitOk;
    }
    const auto *c = weakorder::presets::find_config(show);
    if (!c) {
        std::fprintf(stderr, "no preset config named %s\n", show.c_str());
        return wr::kExitConfigInvalid;
    }
    std::printf("%s\n", c->json);
    return wr::kExitOk;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Sequential weak-measurement simulator"};
    app.set_version_flag("--version", std::string(wr::kVersion));
    app.require_subcommand(1);

    std::string config;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    auto *run = app.add_subcommand("run", "run an experiment config");
    run->add_option("--config", config, "config file (JSON)")->required();
    run->add_option("--out", out_dir, "output directory")->required();
    run->add_option("--seed", seed, "override the config seed");

    auto *validate = app.add_subcommand("validate", "check a config without running it");
    validate->add_option("--config", config, "config file (JSON)")->required();

    std::string show;
    auto *list = app.add_subcommand("list-presets", "named operators, states and example configs");
    list->add_option("--show", show, "print one example config");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : wr::kExitConfigInvalid;
    }

    try {
        if (*run) {
            return do_run(config, out_dir, seed);
        }
        if (*validate) {
            return do_validate(config);
        }
        return do_list(show);
    } catch (const std::exception &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return wr::kExitNumericalFailure;
    }
}
