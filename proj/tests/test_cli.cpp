#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nlsbif/cli.hpp"
#include "support.hpp"

using namespace nlsbif;
namespace fs = std::filesystem;

namespace {

ConfigFile parse(const std::string& text) {
  std::istringstream in(text);
  return ConfigFile::parse(in, "test.ini");
}

std::string error_text(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::path(testing::TempDir()) / ("nlsbif_" + name);
  fs::remove_all(d);
  return d;
}

const char* kSmallTrace =
    "[potential]\nkind = double_well\ns = 0.7\n"
    "[model]\np = 1\nsigma = -2\nnormalization = half_scaled\n"
    "[grid]\nL = 20\ndx = 0.05\norder = 4\n"
    "[continuation]\nE_max = 3\n";

int run_binary(const std::string& args) {
  const char* bin = std::getenv("NLSBIF_BIN");
  if (!bin) return -1;
  const int rc = std::system((std::string(bin) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST(ConfigFile, ParsesSectionsCommentsAndLists) {
  const auto cf = parse("# header\n[a]\nx = 1.5 ; trailing\nname = foo\n[b]\nlist = 1, 2 ,3\n");
  EXPECT_EQ(cf.get_double("a.x"), 1.5);
  EXPECT_EQ(cf.get_string("a.name"), "foo");
  EXPECT_EQ(cf.get_double_list("b.list"), (std::vector<double>{1, 2, 3}));
  EXPECT_FALSE(cf.get_double("a.missing").has_value());
  EXPECT_NO_THROW(cf.reject_unused({"a", "b"}));
}

TEST(ConfigFile, ErrorsCarryLineNumbers) {
  EXPECT_NE(error_text([] { parse("[a]\nx = 1\nx = 2\n"); }).find("test.ini:3"), std::string::npos);
  EXPECT_NE(error_text([] { parse("[a]\n[a]\n"); }).find("duplicate section"), std::string::npos);
  EXPECT_NE(error_text([] { parse("x = 1\n"); }).find("outside any section"), std::string::npos);
  EXPECT_NE(error_text([] { parse("[a]\nnovalue\n"); }).find("test.ini:2"), std::string::npos);
  EXPECT_NE(error_text([] { parse("[a\n"); }).find("unterminated"), std::string::npos);
  EXPECT_NE(error_text([] { parse("[a]\nx =\n"); }).find("no value"), std::string::npos);
  const auto cf = parse("[a]\nx = 1e\ny = 2.5\nb = maybe\n");
  EXPECT_NE(error_text([&] { cf.get_double("a.x"); }).find("test.ini:2"), std::string::npos);
  EXPECT_NE(error_text([&] { cf.get_int("a.y"); }).find("integer"), std::string::npos);
  EXPECT_EQ(code_of([&] { cf.get_bool("a.b"); }), Errc::ConfigError);
}

TEST(ConfigFile, UnknownKeysAndSectionsAreRejected) {
  const auto cf = parse("[a]\nx = 1\ntypo = 2\n[zzz]\nq = 1\n");
  cf.get_double("a.x");
  EXPECT_NE(error_text([&] { cf.reject_unused({"a", "zzz"}); }).find("unknown key 'a.typo'"), std::string::npos);
  EXPECT_NE(error_text([&] { cf.reject_unused({"a"}); }).find("section [zzz]"), std::string::npos);
}

TEST(RunConfig, ValidationMessagesNameTheKey) {
  auto err = [](const std::string& text, cli::Scenario sc = cli::Scenario::Trace) {
    return error_text([&] { cli::parse_run_config(parse(text), sc); });
  };
  EXPECT_NE(err("[grid]\ndx = 0\n").find("grid.dx"), std::string::npos);
  EXPECT_NE(err("[grid]\ndx = -0.1\n").find("positive"), std::string::npos);
  EXPECT_NE(err("[grid]\ndx = 0.1\nn = 101\n").find("not both"), std::string::npos);
  EXPECT_NE(err("[grid]\norder = 3\n").find("grid.order"), std::string::npos);
  EXPECT_NE(err("[model]\np = 0\n").find("model.p"), std::string::npos);
  EXPECT_NE(err("[model]\nsigma = 0\n").find("model.sigma"), std::string::npos);
  EXPECT_NE(err("[model]\nnormalization = other\n").find("half_scaled"), std::string::npos);
  EXPECT_NE(err("[potential]\nkind = single_well\ns = 1\n").find("potential.s"), std::string::npos);
  EXPECT_NE(err("[potential]\nkind = table\n").find("table path"), std::string::npos);
  EXPECT_NE(err("[scaling]\nE_min = 5\n").find("[scaling]"), std::string::npos);
  EXPECT_NE(err("[scaling]\nE_min = 50\nE_max = 10\n", cli::Scenario::Scaling).find("E_min"), std::string::npos);
  EXPECT_NE(err("[continuation]\nbranches = even, sideways\n").find("continuation.branches"), std::string::npos);
  EXPECT_NE(err("[localized]\npoints = center, nowhere\n", cli::Scenario::Localized).find("localized.points"),
            std::string::npos);
  EXPECT_NE(err("[figure]\nid = fig9\n", cli::Scenario::ReproduceFigure).find("fig9"), std::string::npos);
  EXPECT_NE(err("[figure]\nid = fig1\n[model]\np = 2\n", cli::Scenario::ReproduceFigure).find("[model]"),
            std::string::npos);
}

TEST(RunConfig, GridFromNodeCount) {
  const auto rc = cli::parse_run_config(parse("[grid]\nL = 10\nn = 401\n"), cli::Scenario::Trace);
  EXPECT_DOUBLE_EQ(rc.grid.dx, 0.05);
}

TEST(RunConfig, ShippedConfigsParse) {
  const std::pair<const char*, cli::Scenario> shipped[] = {
      {"trace.ini", cli::Scenario::Trace},         {"pitchfork.ini", cli::Scenario::Pitchfork},
      {"scaling.ini", cli::Scenario::Scaling},     {"localized.ini", cli::Scenario::Localized},
      {"fig1.ini", cli::Scenario::ReproduceFigure}, {"fig1a.ini", cli::Scenario::ReproduceFigure},
      {"fig2.ini", cli::Scenario::ReproduceFigure}, {"fig2a.ini", cli::Scenario::ReproduceFigure},
      {"figNew.ini", cli::Scenario::ReproduceFigure}};
  for (const auto& [name, sc] : shipped)
    EXPECT_NO_THROW(cli::parse_run_config(ConfigFile::load(std::string(NLSBIF_CONFIG_DIR) + "/" + name), sc)) << name;
}

TEST(Svg, OutputIsDeterministicAndEscaped) {
  auto draw = [] {
    SvgPlot p{"a < b & c", "E", "N"};
    p.logy = true;
    p.hline = 1.0;
    p.add("one", {1, 2, 3}, {1, 10, 100});
    p.add("two", {1, 2, 3}, {2, -1, 50}, true);  // the negative value is skipped on a log axis
    std::ostringstream os;
    p.write(os);
    return os.str();
  };
  const std::string a = draw();
  EXPECT_EQ(a, draw());
  EXPECT_NE(a.find("a &lt; b &amp; c"), std::string::npos);
  EXPECT_NE(a.find("stroke-dasharray=\"6,4\""), std::string::npos);
  EXPECT_EQ(a.find("nan"), std::string::npos);
  EXPECT_EQ(a.find("inf"), std::string::npos);
}

TEST(Parallel, MapKeepsIndexOrder) {
  const auto out = cli::parallel_map(7, 3, [](std::size_t i) { return static_cast<int>(i * i); });
  EXPECT_EQ(out, (std::vector<int>{0, 1, 4, 9, 16, 25, 36}));
}

TEST(Stage, ErrorsNameTheStage) {
  try {
    cli::stage("linear modes", []() -> int { throw Error(Errc::NoBoundState, "none"); });
    FAIL();
  } catch (const cli::StageError& e) {
    EXPECT_EQ(e.stage(), "linear modes");
    EXPECT_EQ(e.code(), Errc::NoBoundState);
    EXPECT_NE(std::string(e.what()).find("stage 'linear modes'"), std::string::npos);
  }
}

TEST(Run, TraceArtifactsAreByteIdentical) {
  const auto cfg = cli::parse_run_config(parse(kSmallTrace), cli::Scenario::Trace);
  const auto a = scratch_dir("det_a"), b = scratch_dir("det_b");
  cli::run(cfg, "test.ini", a.string(), {2, false});
  cli::run(cfg, "test.ini", b.string(), {1, false});
  for (const char* f : {"branch_even.csv", "N_E.svg", "lambda_E.svg", "summary.txt"})
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  const std::string manifest = slurp(a / "manifest.txt");
  for (const char* key : {"version = ", "compiler = ", "wall_time_s = ", "grid.dx = 0.05", "branch_even.csv"})
    EXPECT_NE(manifest.find(key), std::string::npos) << key;
}

TEST(Run, UnverifiedRowsNeedTheFlag) {
  const auto cfg = cli::parse_run_config(parse(std::string(kSmallTrace) + "[output]\nstationarity_tol = 1e-18\n"),
                                         cli::Scenario::Trace);
  const auto d = scratch_dir("unverified");
  EXPECT_EQ(code_of([&] { cli::run(cfg, "test.ini", d.string(), {1, false}); }), Errc::UnverifiedState);
  EXPECT_FALSE(fs::exists(d));
  const auto res = cli::run(cfg, "test.ini", d.string(), {1, true});
  EXPECT_NE(slurp(d / "manifest.txt").find("allow_unverified = true"), std::string::npos);
}

TEST(Audit, IdenticalResolutionsAgree) {
  const auto cfg = cli::parse_run_config(parse(kSmallTrace), cli::Scenario::Trace);
  const auto a = cli::resolution_audit(cfg, 0.05, 0.05, 3.0, 2);
  EXPECT_FALSE(a.discrepancy());
  EXPECT_EQ(a.coarse.crossings.size(), a.fine.crossings.size());
}

TEST(Audit, NoCrossingForSubcriticalSeparation) {
  auto cfg = cli::parse_run_config(parse("[potential]\ns = 0.6\n[model]\nsigma = -2\nnormalization = half_scaled\n"
                                         "[grid]\ndx = 0.025\n[continuation]\nE_max = 20\n"),
                                   cli::Scenario::Trace);
  const auto a = cli::resolution_audit(cfg, 0.025, 0.0125, 20.0, 2);
  EXPECT_FALSE(a.discrepancy());
  EXPECT_TRUE(a.coarse.crossings.empty());
}

TEST(Binary, ExitCodes) {
  if (!std::getenv("NLSBIF_BIN")) GTEST_SKIP() << "NLSBIF_BIN not set";
  const auto dir = scratch_dir("bin");
  fs::create_directories(dir);
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream(dir / name) << text;
    return (dir / name).string();
  };
  const auto bad = write("bad.ini", "[grid]\ndx = 0\n");
  EXPECT_EQ(run_binary("trace --config " + bad + " --out " + (dir / "o1").string()), 2);
  EXPECT_FALSE(fs::exists(dir / "o1"));
  EXPECT_EQ(run_binary("trace --config " + (dir / "missing.ini").string()), 2);
  EXPECT_EQ(run_binary("nonsense --config " + bad), 2);
  EXPECT_EQ(run_binary("trace"), 2);
  const auto strict = write("strict.ini", std::string(kSmallTrace) + "[output]\nstationarity_tol = 1e-18\n");
  EXPECT_EQ(run_binary("trace --config " + strict + " --out " + (dir / "o2").string()), 3);
  EXPECT_EQ(run_binary("trace --config " + strict + " --allow-unverified --out " + (dir / "o3").string()), 0);
  const auto good = write("good.ini", kSmallTrace);
  EXPECT_EQ(run_binary("trace --config " + good + " --workers 2 --out " + (dir / "o4").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "o4" / "branch_even.csv"));
}
