#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "emgo/dataset.hpp"
#include "emgo/error.hpp"
#include "emgo/report.hpp"
#include "emgo/segment.hpp"
#include "helpers.hpp"

using namespace emgo;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out, err;
};

Run run_cmd(std::vector<std::string> args, const ByteSource& in = {}) {
  args.insert(args.begin(), "emgo");
  std::ostringstream out, err;
  Run r;
  r.code = cli::run_cli(args, out, err, in);
  r.out = out.str();
  r.err = err.str();
  return r;
}

// Two synthetic subjects shared by every CLI test.
const fs::path& data_dir() {
  static testing::TempDir dir("cli_data");
  static const bool made = [] {
    const Run r = run_cmd({"synth", "--out", dir.path.string(), "--subjects", "2", "--seed", "42"});
    REQUIRE(r.code == 0);
    return true;
  }();
  (void)made;
  return dir.path;
}

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

ResultRow row(const std::string& scheme, const std::string& method, int subject, double f1) {
  ResultRow r;
  r.scheme = scheme;
  r.position = "forearm";
  r.method = method;
  r.classifier = "LDA";
  r.subject = subject;
  r.f1 = f1;
  r.accuracy = 0.9;
  return r;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("config grammar") {
    const auto kv = cli::parse_config(
        "# comment\n\nfilter.band_order = 2\n  method=tdd   # trailing\nfilter.notch_bw_hz = 3.5\n");
    REQUIRE(kv.size() == 3);
    CHECK(kv[0] == std::pair<std::string, std::string>{"filter-band-order", "2"});
    CHECK(kv[1] == std::pair<std::string, std::string>{"method", "tdd"});
    CHECK(kv[2] == std::pair<std::string, std::string>{"filter-notch-bw-hz", "3.5"});
  }

  TEST_CASE("usage errors exit 2 with help, domain errors exit 1") {
    Run r = run_cmd({"evaluate", "--data", "x", "--bogus"});
    CHECK(r.code == 2);
    CHECK(r.err.find("--scheme") != std::string::npos);
    CHECK(run_cmd({}).code == 2);
    CHECK(run_cmd({"frobnicate"}).code == 2);
    CHECK(run_cmd({"evaluate"}).code == 2);
    CHECK(run_cmd({"--help"}).code == 0);
    CHECK(run_cmd({"evaluate", "--help"}).code == 0);
    testing::TempDir empty("cli_empty");
    r = run_cmd({"evaluate", "--data", empty.path.string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("MissingManifest") != std::string::npos);
    CHECK(run_cmd({"evaluate", "--data", data_dir().string(), "--method", "fft"}).code == 2);
  }

  TEST_CASE("synth writes the dataset tree and profile") {
    CHECK(fs::exists(data_dir() / "manifest.json"));
    CHECK(fs::exists(data_dir() / "profile.json"));
    CHECK(fs::exists(data_dir() / "S2/RD/supination/t5.csv"));
    ValidationReport rep;
    const Dataset ds = load_dataset(data_dir(), &rep);
    CHECK(ds.recordings.size() == 360);
    CHECK(rep.ok());
  }

  TEST_CASE("evaluate is deterministic and emits every artifact") {
    testing::TempDir a("cli_eval_a"), b("cli_eval_b");
    for (const auto* dir : {&a, &b}) {
      const Run r = run_cmd({"evaluate", "--data", data_dir().string(), "--scheme", "caseA", "--method", "sntdf",
                         "--classifier", "lda", "--position", "forearm", "--out", dir->path.string()});
      REQUIRE(r.code == 0);
    }
    const std::string csv = read_text(a.path / "results.csv");
    CHECK(csv == read_text(b.path / "results.csv"));
    CHECK(read_text(a.path / "table.txt") == read_text(b.path / "table.txt"));
    CHECK(csv.rfind("scheme,position,method,classifier,subject,accuracy,sensitivity,specificity,precision,f1,mcc,"
                    "f1_fold_std\n",
                    0) == 0);
    CHECK(line_count(csv) == 3);
    const auto rows = parse_results_csv(csv);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].scheme == "caseA");
    CHECK(rows[0].method == "SNTDF");
    CHECK(rows[0].f1 > 0.3);
    for (int k = 1; k <= 5; ++k) {
      const fs::path p = a.path / ("confusion_fold" + std::to_string(k) + ".csv");
      REQUIRE(fs::exists(p));
      CHECK(read_text(p) == read_text(b.path / p.filename()));
    }
    const std::string table = read_text(a.path / "table.txt");
    CHECK(table.find("SNTDF") != std::string::npos);
    CHECK(table.find("F1") != std::string::npos);
  }

  TEST_CASE("config values apply and explicit flags win") {
    testing::TempDir out("cli_cfg");
    const fs::path cfg = out.path / "run.cfg";
    std::ofstream(cfg) << "method = tdd\nclassifier = knn\nposition = elbow\nnot_an_option = 1\n";
    Run r = run_cmd({"evaluate", "--config", cfg.string(), "--data", data_dir().string(), "--method", "hsl",
                 "--out", out.path.string()});
    REQUIRE(r.code == 0);
    CHECK(r.err.find("not-an-option") != std::string::npos);
    const auto rows = parse_results_csv(read_text(out.path / "results.csv"));
    REQUIRE_FALSE(rows.empty());
    for (const auto& x : rows) {
      CHECK(x.method == "HSL");
      CHECK(x.classifier == "KNN");
      CHECK(x.position == "elbow");
    }
    std::ofstream(cfg) << "filter.band_order = 0\nmethod = tdd\n";
    r = run_cmd({"evaluate", "--config", cfg.string(), "--data", data_dir().string(), "--out", out.path.string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("InvalidSpec") != std::string::npos);
  }

  TEST_CASE("train, stream and score a model") {
    testing::TempDir out("cli_model");
    const std::string model = (out.path / "m.bin").string();
    Run r = run_cmd({"train", "--data", data_dir().string(), "--method", "sntdf", "--classifier", "lda",
                 "--position", "forearm", "--subject", "1", "--out", model});
    REQUIRE(r.code == 0);
    REQUIRE(fs::exists(model));

    r = run_cmd({"stream", "--model", model, "--replay", data_dir().string(), "--trial", "S1/WF/rest/t3",
             "--position", "forearm", "--out", out.path.string()});
    REQUIRE(r.code == 0);
    CHECK(line_count(r.out) == 1 + 24);
    CHECK(r.out.find(",WF,") != std::string::npos);
    CHECK(r.err.find("p99=") != std::string::npos);
    CHECK(fs::exists(out.path / "latency.csv"));
    CHECK(line_count(read_text(out.path / "decisions.csv")) == 25);

    // Same trial through the stdin path.
    const Dataset ds = load_dataset(data_dir());
    const Recording rec = slice_position(*ds.find({1, Gesture::WF, Orientation::Rest, 3}), ElectrodePosition::Forearm);
    const auto bytes = frame_recording(rec, detect_active_segment(*ds.find({1, Gesture::WF, Orientation::Rest, 3})).active);
    std::size_t pos = 0;
    const ByteSource in = [&](std::span<std::uint8_t> buf) {
      const std::size_t n = std::min(buf.size(), bytes.size() - pos);
      std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(pos), n, buf.begin());
      pos += n;
      return n;
    };
    const Run s = run_cmd({"stream", "--model", model, "--policy", "block"}, in);
    REQUIRE(s.code == 0);
    // Decision column sequence matches the replay path.
    auto gestures = [](const std::string& text) {
      std::vector<std::string> g;
      std::istringstream ss(text);
      std::string line;
      std::getline(ss, line);
      while (std::getline(ss, line)) g.push_back(line.substr(line.find(',') + 1, line.rfind(',') - line.find(',') - 1));
      return g;
    };
    CHECK(gestures(s.out) == gestures(r.out));

    r = run_cmd({"evaluate", "--data", data_dir().string(), "--model", model, "--subject", "1", "--out",
             out.path.string()});
    REQUIRE(r.code == 0);
    const auto rows = parse_results_csv(read_text(out.path / "results.csv"));
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].scheme == "model");

    CHECK(run_cmd({"stream", "--model", model, "--replay", data_dir().string(), "--trial", "S9/WF/rest/t3"}).code == 1);
  }

  TEST_CASE("stats and report over evaluate output") {
    testing::TempDir a("cli_stats_a"), b("cli_stats_b");
    REQUIRE(run_cmd({"evaluate", "--data", data_dir().string(), "--scheme", "caseA", "--method", "hsl,tdd",
                 "--classifier", "lda", "--position", "forearm", "--out", a.path.string()})
                .code == 0);
    REQUIRE(run_cmd({"evaluate", "--data", data_dir().string(), "--scheme", "caseB", "--method", "hsl,tdd",
                 "--classifier", "lda", "--position", "forearm", "--out", b.path.string()})
                .code == 0);
    Run r = run_cmd({"stats", "--results", (a.path / "results.csv").string(), "--bonferroni", "3", "--out",
                 a.path.string()});
    REQUIRE(r.code == 0);
    const std::string anova_csv = read_text(a.path / "anova.csv");
    CHECK(anova_csv.find("method") != std::string::npos);
    CHECK(anova_csv.find("significant") != std::string::npos);

    r = run_cmd({"report", "--results", (a.path / "results.csv").string(), (b.path / "results.csv").string(), "--out",
             b.path.string()});
    REQUIRE(r.code == 0);
    const std::string md = read_text(b.path / "report.md");
    CHECK(md.find("caseB vs caseA") != std::string::npos);
    const double fa = mean_f1(parse_results_csv(read_text(a.path / "results.csv"))) * 100.0;
    const double fb = mean_f1(parse_results_csv(read_text(b.path / "results.csv"))) * 100.0;
    char delta[32];
    std::snprintf(delta, sizeof delta, "%+.2f", fb - fa);
    CHECK(md.find(delta) != std::string::npos);
  }

  TEST_CASE("quality and features subcommands") {
    testing::TempDir out("cli_misc");
    REQUIRE(run_cmd({"quality", "--data", data_dir().string(), "--out", out.path.string()}).code == 0);
    CHECK(line_count(read_text(out.path / "quality.csv")) == 13);
    const std::string f = (out.path / "tdd.csv").string();
    REQUIRE(run_cmd({"features", "--in", data_dir().string(), "--method", "tdd", "--subject", "1", "--out", f}).code == 0);
    const std::string text = read_text(f);
    CHECK(line_count(text) == 1 + 180 * 24);
    REQUIRE(run_cmd({"features", "--in", data_dir().string(), "--method", "all", "--subject", "2", "--out",
                 (out.path / "all").string()})
                .code == 0);
    CHECK(fs::exists(out.path / "all" / "features_SNTDF.csv"));
    CHECK(fs::exists(out.path / "all" / "features_AR-RMS.csv"));
  }
}

TEST_SUITE("report") {
  TEST_CASE("comparison reports F1 deltas in points and percent") {
    const std::vector<ResultRow> a = {row("caseA", "SNTDF", 1, 0.5), row("caseA", "SNTDF", 2, 0.5)};
    const std::vector<ResultRow> b = {row("caseB", "SNTDF", 1, 0.6), row("caseB", "SNTDF", 2, 0.6)};
    const std::string md = format_comparison({a, b});
    CHECK(md.find("| caseA | 2 | 50.00 |") != std::string::npos);
    CHECK(md.find("| caseB vs caseA | +10.00 | +20.00 |") != std::string::npos);
  }

  TEST_CASE("results csv round-trips and rejects junk") {
    std::vector<ResultRow> rows = {row("caseA", "TDD", 1, 0.123456), row("caseC", "HSL", 3, 0.75)};
    rows[1].position = "both";
    rows[1].mcc = -0.25;
    rows[1].f1_fold_std = 0.01;
    const auto back = parse_results_csv(format_results_csv(rows));
    REQUIRE(back.size() == 2);
    CHECK(back[0].f1 == doctest::Approx(0.123456));
    CHECK(back[1].position == "both");
    CHECK(back[1].mcc == doctest::Approx(-0.25));
    CHECK(back[1].f1_fold_std == doctest::Approx(0.01));
    CHECK(format_results_csv(back) == format_results_csv(rows));
    try {
      parse_results_csv("scheme,position\ncaseA,forearm\n");
      FAIL("expected InvalidConfig");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InvalidConfig);
    }
  }

  TEST_CASE("anova over result rows uses subjects as replicates") {
    std::vector<ResultRow> rows;
    for (int s = 1; s <= 4; ++s) {
      rows.push_back(row("caseA", "SNTDF", s, 0.8 + 0.01 * s));
      rows.push_back(row("caseA", "TDD", s, 0.6 + 0.01 * s));
    }
    const AnovaResult r = anova_f1(rows);
    REQUIRE(r.effects.size() == 1);
    CHECK(r.effects[0].factor == "method");
    CHECK(r.effects[0].ss == doctest::Approx(8 * 0.01));
    CHECK(r.effects[0].p < 0.05);
    CHECK(format_anova_csv(r).find("method") != std::string::npos);
  }

  TEST_CASE("table shows mean and std across subjects") {
    std::vector<ResultRow> rows = {row("caseA", "SNTDF", 1, 0.5), row("caseA", "SNTDF", 2, 0.7)};
    const std::string t = format_results_table(rows);
    CHECK(t.find("60.00") != std::string::npos);
    CHECK(t.find("14.14") != std::string::npos);
  }
}
