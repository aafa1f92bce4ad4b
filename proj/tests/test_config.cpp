#include "hnls/config.hpp"
#include "hnls/errors.hpp"
#include "hnls/manifest.hpp"
#include "hnls/runner.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace hnls;
namespace fs = std::filesystem;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    return ErrorKind::Io;
}

fs::path fresh_dir(const char* name) {
    const auto d = fs::temp_directory_path() / name;
    fs::remove_all(d);
    return d;
}

} // namespace

TEST_CASE("config parsing: comments, whitespace, defaults") {
    auto cfg = parse_config("# a run\nexperiment = ground_state\n  output_dir=/tmp/x  # inline\n\nc = 0.2\n");
    CHECK(cfg.experiment == Experiment::ground_state);
    cfg.validate();
    CHECK(cfg.get_double("c") == 0.2);
    CHECK(cfg.get_int("nodes") == 8192);
    CHECK(cfg.get_bool("oracle"));
    CHECK(cfg.output_dir == "/tmp/x");
    auto again = parse_config(cfg.text());
    again.validate();
    CHECK(again.text() == cfg.text());
}

TEST_CASE("config errors") {
    CHECK(kind_of([] { parse_config("c = 0.1\n"); }) == ErrorKind::Format);
    CHECK(kind_of([] { parse_config("experiment = nope\n"); }) == ErrorKind::Parameter);
    CHECK(kind_of([] { parse_config("experiment = evolve\nexperiment = evolve\n"); }) == ErrorKind::Format);
    CHECK(kind_of([] { parse_config("experiment = evolve\njust words\n"); }) == ErrorKind::Format);
    auto validate = [](const std::string& text) { return [text] { parse_config(text).validate(); }; };
    const std::string base = "experiment = ground_state\noutput_dir = /tmp/x\n";
    // The critical coupling is excluded before any computation happens.
    CHECK(kind_of(validate(base + "c = 0.25\n")) == ErrorKind::Parameter);
    CHECK(kind_of(validate(base + "c = 0\n")) == ErrorKind::Parameter);
    CHECK(kind_of(validate(base + "d = 5\nc = 2.25\n")) == ErrorKind::Parameter);
    CHECK(kind_of(validate(base + "c = abc\n")) == ErrorKind::Format);
    CHECK(kind_of(validate(base + "colour = red\n")) == ErrorKind::Parameter);
    CHECK(kind_of(validate("experiment = ground_state\n")) == ErrorKind::Parameter);
    CHECK(kind_of(validate("experiment = concentrate\noutput_dir = /tmp/x\n")) == ErrorKind::Parameter);
    parse_config("experiment = pipeline_theorem11\noutput_dir = /tmp/x\n").validate();
    CHECK(kind_of(validate("experiment = concentrate\noutput_dir = /tmp/x\ntrace_dir = /a\nt_star = x\n")) ==
          ErrorKind::Format);
    CHECK(kind_of(validate("experiment = pipeline_theorem11\noutput_dir = /tmp/x\nbeta = 0.5\n")) ==
          ErrorKind::Parameter);
}

TEST_CASE("experiment names accept dashes") {
    CHECK(experiment_from_string("pipeline-lemma22") == Experiment::pipeline_lemma22);
    for (auto e : {Experiment::ground_state, Experiment::evolve, Experiment::concentrate, Experiment::profiles,
                   Experiment::verify_functionals, Experiment::pipeline_theorem11, Experiment::pipeline_lemma22})
        CHECK(experiment_from_string(to_string(e)) == e);
}

TEST_CASE("git blob hash matches git") {
    // `printf 'hello\n' | git hash-object --stdin`
    CHECK(git_blob_hash("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
    CHECK(git_blob_hash("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
}

TEST_CASE("manifest detects modified and missing artifacts") {
    const auto dir = fresh_dir("hnls_manifest_test");
    fs::create_directories(dir / "sub");
    std::ofstream(dir / "a.txt") << "alpha\n";
    std::ofstream(dir / "sub" / "b.txt") << "beta\n";
    RunManifest m;
    m.experiment = "ground_state";
    m.artifacts = scan_artifacts(dir);
    REQUIRE(m.artifacts.size() == 2);
    CHECK(m.artifacts[1].path == "sub/b.txt");
    write_manifest(dir, m);
    const auto back = read_manifest(dir);
    CHECK(back.artifacts.size() == 2);
    verify_manifest(dir, back);
    std::ofstream(dir / "a.txt") << "alpha!\n";
    CHECK(kind_of([&] { verify_manifest(dir, back); }) == ErrorKind::HashMismatch);
    fs::remove(dir / "a.txt");
    CHECK(kind_of([&] { verify_manifest(dir, back); }) == ErrorKind::Io);
    fs::remove_all(dir);
}

TEST_CASE("directory lock is exclusive") {
    const auto dir = fresh_dir("hnls_lock_test");
    {
        DirectoryLock a(dir);
        CHECK(kind_of([&] { DirectoryLock b(dir); }) == ErrorKind::Io);
    }
    DirectoryLock c(dir);
    fs::remove_all(dir);
}

TEST_CASE("run writes a complete manifest and reruns reproduce it") {
    const auto dir = fresh_dir("hnls_run_test");
    RunConfig cfg;
    cfg.experiment = Experiment::ground_state;
    cfg.output_dir = dir;
    cfg.set("nodes", "2048");
    cfg.set("oracle", "false");
    const auto r1 = run(cfg);
    CHECK(r1.passed);
    const auto m1 = read_manifest(dir);
    verify_manifest(dir, m1);
    CHECK(m1.artifacts.size() == scan_artifacts(dir).size());
    const auto r2 = run(cfg);
    const auto m2 = read_manifest(dir);
    REQUIRE(m1.artifacts.size() == m2.artifacts.size());
    for (std::size_t i = 0; i < m1.artifacts.size(); ++i) CHECK(m1.artifacts[i].hash == m2.artifacts[i].hash);
    // Foreign content is never deleted.
    std::ofstream(dir / "notes.txt") << "mine\n";
    fs::remove(dir / kManifestName);
    CHECK(kind_of([&] { run(cfg); }) == ErrorKind::Io);
    CHECK(fs::exists(dir / "notes.txt"));
    fs::remove_all(dir);
}

TEST_CASE("stage errors name the stage") {
    RunConfig cfg;
    cfg.experiment = Experiment::concentrate;
    cfg.output_dir = fresh_dir("hnls_stage_test");
    cfg.set("trace_dir", "/nonexistent/run");
    try {
        run(cfg);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("stage source") != std::string::npos);
    }
    fs::remove_all(cfg.output_dir);
}
