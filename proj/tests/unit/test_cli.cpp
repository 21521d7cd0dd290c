#include <lbsim/commands.hpp>

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

namespace fs = std::filesystem;

namespace
{
const fs::path work = fs::temp_directory_path() / "lbsim_cli";

int cli( const std::string& args )
{
    const std::string cmd = std::string( LBSIM_CLI ) + " " + args + " > " +
                            ( work / "stdout.txt" ).string() + " 2> " +
                            ( work / "stderr.txt" ).string();
    const int status = std::system( cmd.c_str() );
    return WIFEXITED( status ) ? WEXITSTATUS( status ) : -1;
}

std::string read( const fs::path& p )
{
    std::ifstream in( p );
    return { std::istreambuf_iterator<char>( in ), {} };
}

class Cli : public ::testing::Test
{
  protected:
    void SetUp() override { fs::create_directories( work ); }
};
} // namespace

TEST_F( Cli, UsageErrors )
{
    EXPECT_EQ( cli( "" ), 1 );
    EXPECT_EQ( cli( "run --policy bogus" ), 1 );
    EXPECT_EQ( cli( "run --policy none --interval 3" ), 1 );
    EXPECT_EQ( cli( "run --weights 1" ), 1 );
    std::ofstream( work / "bad.json" ) << R"({"scenario": {"n_ranks": "x"}})";
    EXPECT_EQ( cli( "run --config " + ( work / "bad.json" ).string() ), 1 );
    EXPECT_NE( read( work / "stderr.txt" ).find( "scenario.n_ranks" ), std::string::npos );
}

TEST_F( Cli, IoErrors )
{
    EXPECT_EQ( cli( "run --config /nonexistent/cfg.json" ), 2 );
    std::ofstream( work / "blocker" ) << "x";
    EXPECT_EQ( cli( "run --steps 3 --out " + ( work / "blocker" / "out" ).string() ), 2 );
    EXPECT_EQ( cli( "fit --points /nonexistent.csv" ), 2 );
}

TEST_F( Cli, RunReplayCompare )
{
    const auto out = work / "run";
    fs::remove_all( out );
    ASSERT_EQ( cli( "run --scenario memory_limited --steps 40 --box-size 16 --weights 0.5,0.5 "
                    "--seed 3 --threshold 0.05 --interval 5 --out " + out.string() ),
               0 );
    const auto cfg = lbsim::load_run_config( ( out / "config.json" ).string() );
    EXPECT_EQ( cfg.scenario.box_size, 16 );
    EXPECT_EQ( cfg.scenario.seed, 3u );
    EXPECT_EQ( cfg.scenario.total_steps, 40 );
    EXPECT_EQ( cfg.costs.weights.particle, 0.5 );
    EXPECT_EQ( cfg.policy.interval, 5 );
    EXPECT_EQ( cfg.policy.improvement_threshold, 0.05 );

    ASSERT_EQ( cli( "replay --trace " + ( out / "costs.csv" ).string() + " --mapping " +
                    ( out / "initial_mapping.csv" ).string() + " --config " +
                    ( out / "config.json" ).string() + " --out " + ( out / "rp" ).string() ),
               0 );
    const auto replay = read( out / "rp" / "replay.csv" );
    EXPECT_EQ( replay.substr( 0, replay.find( '\n' ) ), "step,eff_before,eff_after,adopted" );

    ASSERT_EQ( cli( "compare " + out.string() + " " + out.string() ), 0 );
    EXPECT_NE( read( work / "stdout.txt" ).find( "1.000" ), std::string::npos );
}

TEST_F( Cli, ReplayReportsTraceGap )
{
    std::ofstream( work / "gap.csv" ) << "step,box_id,cost\n0,0,1\n0,1,2\n2,0,1\n2,1,2\n";
    std::ofstream( work / "map.csv" ) << "step,box_id,rank\n0,0,0\n0,1,1\n";
    EXPECT_EQ( cli( "replay --trace " + ( work / "gap.csv" ).string() + " --mapping " +
                    ( work / "map.csv" ).string() ),
               1 );
    EXPECT_NE( read( work / "stderr.txt" ).find( "missing step 1" ), std::string::npos );
}

TEST_F( Cli, Fit )
{
    std::ofstream( work / "pts.csv" ) << "nodes,walltime\n1,100\n2,50\n4,25\n";
    ASSERT_EQ( cli( "fit --points " + ( work / "pts.csv" ).string() + " --e0 1/2" ), 0 );
    const auto text = read( work / "stdout.txt" );
    EXPECT_NE( text.find( "x        1.000000" ), std::string::npos ) << text;
    EXPECT_NE( text.find( "S 2.0000" ), std::string::npos ) << text;
    std::ofstream( work / "one.csv" ) << "nodes,walltime\n6,1\n";
    EXPECT_EQ( cli( "fit --points " + ( work / "one.csv" ).string() ), 1 );
}

TEST_F( Cli, OomExitCode )
{
    EXPECT_EQ( cli( "run --scenario memory_limited --policy none --out " +
                    ( work / "oom" ).string() ),
               3 );
}
