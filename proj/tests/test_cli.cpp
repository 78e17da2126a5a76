#include <gtest/gtest.h>

#include <sys/wait.h>

#include <fstream>
#include <sstream>

#include "attrition/artifacts.hpp"
#include "json.hpp"
#include "support.hpp"

using namespace attrition;
using nlohmann::json;

namespace {

struct Result {
  int status = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Result cli(const std::string& args, const std::filesystem::path& scratch) {
  const auto out = scratch / "stdout.txt";
  const auto err = scratch / "stderr.txt";
  const std::string cmd = std::string("'") + ATTRITION_CLI + "' " + args + " >'" + out.string() + "' 2>'" +
                          err.string() + "'";
  const int raw = std::system(cmd.c_str());
  Result r;
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

const std::string kQuickRun = " --models gnb,dt --folds 3 --background 10 --weights StockOptionLevel=2,JobLevel=2";

}  // namespace

TEST(Cli, RunIsDeterministicAndEvaluable) {
  fixtures::TempDir tmp("cli-run");
  const auto a = tmp.path() / "a", b = tmp.path() / "b";
  const std::string data = " --data '" + fixtures::ibm_csv().string() + "'";
  const Result ra = cli("run" + data + kQuickRun + " --out '" + a.string() + "'", tmp.path());
  ASSERT_EQ(ra.status, 0) << ra.err;
  const Result rb = cli("run" + data + kQuickRun + " --out '" + b.string() + "'", tmp.path());
  ASSERT_EQ(rb.status, 0) << rb.err;
  EXPECT_EQ(ra.out, rb.out);
  EXPECT_EQ(ra.out, slurp(a / kReportFile));
  for (const char* f : {kReportFile, kReportJsonFile, kModelFile, "models/GaussianNB.json", "models/DecisionTree.json"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  EXPECT_EQ(cli("evaluate --check --artifacts '" + a.string() + "'", tmp.path()).status, 0);
  {
    std::ofstream(a / kReportFile, std::ios::app) << "tampered\n";
  }
  const Result bad = cli("evaluate --check --artifacts '" + a.string() + "'", tmp.path());
  EXPECT_EQ(bad.status, 1);
  EXPECT_NE(bad.err.find("report.txt"), std::string::npos);
}

TEST(Cli, ConfigFileWithFlagOverride) {
  fixtures::TempDir tmp("cli-config");
  const auto cfg = tmp.path() / "run.cfg";
  {
    std::ofstream out(cfg);
    out << "# quick run\n"
        << "data = " << fixtures::ibm_csv().string() << "\n"
        << "seed = 11\nmodels = gnb\nfolds = 2\nbackground = 5\noutlier = true\n"
        << "out = " << (tmp.path() / "out").string() << "\n";
  }
  const Result r = cli("run --config '" + cfg.string() + "' --seed 12", tmp.path());
  ASSERT_EQ(r.status, 0) << r.err;
  const json p = json::parse(slurp(tmp.path() / "out" / kPipelineFile)).at("data");
  EXPECT_EQ(p["config"]["seed"], 12);
  EXPECT_EQ(p["config"]["folds"], 2);
  EXPECT_EQ(p["config"]["flags"]["outlier_detect"], true);
  EXPECT_EQ(p["config"]["models"], json({"GaussianNB"}));

  {
    std::ofstream(cfg, std::ios::app) << "colour = blue\n";
  }
  const Result bad = cli("run --config '" + cfg.string() + "'", tmp.path());
  EXPECT_NE(bad.status, 0);
  EXPECT_NE(bad.err.find("colour"), std::string::npos);
}

TEST(Cli, ExplainWhatIfAndFailures) {
  fixtures::TempDir tmp("cli-explain");
  const auto out = tmp.path() / "out";
  ASSERT_EQ(cli("run --data '" + fixtures::ibm_csv().string() + "'" + kQuickRun + " --out '" + out.string() + "'",
                tmp.path())
                .status,
            0);
  const std::string art = " --artifacts '" + out.string() + "'";
  const Result e = cli("explain" + art + " --row 4 --top-k 3", tmp.path());
  ASSERT_EQ(e.status, 0) << e.err;
  const json ej = json::parse(e.out);
  EXPECT_LE(ej["narrative"]["reasons"].size(), 3u);
  EXPECT_NE(ej["prompt"].get<std::string>().find("The SHAP value for feature 'Age' is"), std::string::npos);

  const auto inst = tmp.path() / "inst.json";
  {
    std::ofstream(inst) << ej["instance"].dump();
  }
  const Result e2 = cli("explain" + art + " --instance '" + inst.string() + "' --top-k 3", tmp.path());
  ASSERT_EQ(e2.status, 0) << e2.err;
  EXPECT_EQ(json::parse(e2.out)["proba"], ej["proba"]);

  const Result w = cli("whatif" + art + " --row 4 --set OverTime=No --set MonthlyIncome=*1.5 --set StockOptionLevel=+1",
                       tmp.path());
  ASSERT_EQ(w.status, 0) << w.err;
  const json wj = json::parse(w.out);
  EXPECT_EQ(wj["instance"]["OverTime"], "No");
  EXPECT_DOUBLE_EQ(wj["instance"]["MonthlyIncome"].get<double>(),
                   ej["instance"]["MonthlyIncome"].get<double>() * 1.5);

  const Result wbad = cli("whatif" + art + " --row 4 --set OverTime=Perhaps", tmp.path());
  EXPECT_NE(wbad.status, 0);
  EXPECT_EQ(std::count(wbad.err.begin(), wbad.err.end(), '\n'), 1);

  EXPECT_NE(cli("explain" + art + " --row 9999", tmp.path()).status, 0);
  EXPECT_NE(cli("run --folds 3", tmp.path()).status, 0);
  EXPECT_NE(cli("run --bogus", tmp.path()).status, 0);

  {
    std::ofstream(out / kBackgroundFile) << "[1, 2";
  }
  const Result s = cli("serve" + art + " --port 0", tmp.path());
  EXPECT_NE(s.status, 0);
  EXPECT_NE(s.err.find(kBackgroundFile), std::string::npos) << s.err;
  EXPECT_EQ(std::count(s.err.begin(), s.err.end(), '\n'), 1);
}
