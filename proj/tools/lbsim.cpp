// lbsim: scenario runs, trace replay, scaling fits and run comparison.

#include <lbsim/lbsim.hpp>

#include <CLI11.hpp>

#include <cmath>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace
{

using namespace lbsim;

struct PolicyFlags
{
    std::string policy;
    std::optional<std::int64_t> interval;
    std::optional<double> threshold;
    std::optional<std::int64_t> static_step;
};

void add_policy_flags( CLI::App* app, PolicyFlags& f )
{
    app->add_option( "--policy", f.policy, "none, static, knapsack, sfc or sfc-exact" )
        ->check( CLI::IsMember( { "none", "static", "knapsack", "sfc", "sfc-exact" } ) );
    app->add_option( "--interval", f.interval, "steps between rebalance attempts" );
    app->add_option( "--threshold", f.threshold,
                     "minimum improvement for adoption (0.1 = 10%)" );
    app->add_option( "--static-step", f.static_step, "attempt step of a static policy" );
}

// Flags layered over a base policy. Dynamic knapsack/sfc keep the base
// interval unless --interval is given; static keeps the base strategy.
BalancePolicy apply_policy_flags( BalancePolicy p, const PolicyFlags& f )
{
    if ( f.policy == "none" )
        p = [&] {
            auto n = BalancePolicy::none();
            n.strategy = p.strategy;
            n.improvement_threshold = p.improvement_threshold;
            n.threshold_mode = p.threshold_mode;
            n.knapsack_cap_factor = p.knapsack_cap_factor;
            return n;
        }();
    else if ( f.policy == "static" )
    {
        p.interval.reset();
        p.forced_step = p.forced_step.value_or( 0 );
    }
    else if ( !f.policy.empty() )
    {
        p.strategy = parse_strategy( f.policy );
        p.interval = p.interval.value_or( 10 );
        p.forced_step.reset();
    }

    if ( f.interval )
    {
        if ( !p.interval )
            throw ConfigError( "--interval applies only to dynamic policies" );
        p.interval = *f.interval;
    }
    if ( f.static_step )
    {
        if ( !p.forced_step )
            throw ConfigError( "--static-step applies only to --policy static" );
        p.forced_step = *f.static_step;
    }
    if ( f.threshold )
        p.improvement_threshold = *f.threshold;
    return p;
}

std::pair<double, double> parse_weights( const std::string& s )
{
    const auto comma = s.find( ',' );
    if ( comma == std::string::npos )
        throw ConfigError( "--weights expects WP,WC, got '" + s + "'" );
    try
    {
        std::size_t u1 = 0, u2 = 0;
        const double a = std::stod( s.substr( 0, comma ), &u1 );
        const double b = std::stod( s.substr( comma + 1 ), &u2 );
        if ( u1 != comma || u2 != s.size() - comma - 1 )
            throw std::invalid_argument( s );
        return { a, b };
    }
    catch ( const std::exception& )
    {
        throw ConfigError( "--weights expects two numbers WP,WC, got '" + s + "'" );
    }
}

// Accepts "0.16" or a fraction such as "1/6.2".
double parse_efficiency( const std::string& s )
{
    try
    {
        const auto slash = s.find( '/' );
        std::size_t used = 0;
        if ( slash == std::string::npos )
        {
            const double v = std::stod( s, &used );
            if ( used == s.size() )
                return v;
        }
        else
        {
            std::size_t u2 = 0;
            const double num = std::stod( s.substr( 0, slash ), &used );
            const double den = std::stod( s.substr( slash + 1 ), &u2 );
            if ( used == slash && u2 == s.size() - slash - 1 )
                return num / den;
        }
    }
    catch ( const std::exception& )
    {
    }
    throw ConfigError( "--e0 expects a number or fraction, got '" + s + "'" );
}

Extent parse_grid( const std::string& s )
{
    const auto p = parse_weights( s );
    if ( p.first < 1 || p.second < 1 || p.first != std::floor( p.first ) ||
         p.second != std::floor( p.second ) )
        throw ConfigError( "--grid expects two positive integers NZ,NX" );
    return { int( p.first ), int( p.second ) };
}

} // namespace

int main( int argc, char** argv )
{
    CLI::App app{ "Load-balancing laboratory for block-decomposed particle-mesh workloads" };
    app.require_subcommand( 1 );

    // run
    auto* run = app.add_subcommand( "run", "simulate a scenario under a balancing policy" );
    std::string config_path, scenario_name, out_dir = "out", cost_name, weights;
    std::optional<int> box_size;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> steps;
    PolicyFlags run_policy;
    run->add_option( "--config", config_path, "JSON run configuration" );
    run->add_option( "--scenario", scenario_name, "built-in scenario" )
        ->check( CLI::IsMember( scenarios::names() ) );
    add_policy_flags( run, run_policy );
    run->add_option( "--box-size", box_size, "box edge length in cells" );
    run->add_option( "--cost", cost_name, "cost provider" )
        ->check( CLI::IsMember( { "heuristic", "measured", "instrumented" } ) );
    run->add_option( "--weights", weights, "heuristic weights WP,WC" );
    run->add_option( "--seed", seed, "random seed" );
    run->add_option( "--steps", steps, "override the step count" );
    run->add_option( "--out", out_dir, "output directory" );

    // replay
    auto* replay = app.add_subcommand( "replay", "re-run balancing decisions on a cost trace" );
    std::string trace_path, mapping_path, grid_text, replay_config, replay_out;
    std::optional<int> replay_ranks;
    PolicyFlags replay_policy;
    replay->add_option( "--trace", trace_path, "cost trace CSV (step,box_id,cost)" )->required();
    replay->add_option( "--mapping", mapping_path, "initial mapping CSV (step,box_id,rank)" )
        ->required();
    replay->add_option( "--grid", grid_text, "box grid NZ,NX for curve strategies" );
    replay->add_option( "--ranks", replay_ranks, "rank count (default: from mapping)" );
    replay->add_option( "--config", replay_config, "take policy and grid from a run config" );
    add_policy_flags( replay, replay_policy );
    replay->add_option( "--out", replay_out, "write replay.csv into this directory" );

    // fit
    auto* fit = app.add_subcommand( "fit", "fit a strong-scaling power law" );
    std::string points_path;
    std::vector<std::string> e0_text;
    fit->add_option( "--points", points_path, "scaling CSV (nodes,walltime)" )->required();
    fit->add_option( "--e0", e0_text, "initial efficiencies for the speedup estimate" );

    // compare
    auto* compare = app.add_subcommand( "compare", "compare run output directories" );
    std::vector<std::string> compare_dirs;
    compare->add_option( "dirs", compare_dirs, "run output directories" )->required();

    try
    {
        app.parse( argc, argv );
    }
    catch ( const CLI::ParseError& e )
    {
        const int rc = app.exit( e );
        return rc == 0 ? exit_code::ok : exit_code::usage;
    }

    try
    {
        if ( *run )
        {
            RunConfig cfg;
            if ( !config_path.empty() )
            {
                if ( !scenario_name.empty() )
                    throw ConfigError( "--config and --scenario are mutually exclusive" );
                cfg = load_run_config( config_path );
            }
            else if ( !scenario_name.empty() )
                cfg.scenario = scenarios::by_name( scenario_name );
            cfg.policy = apply_policy_flags( cfg.policy, run_policy );
            if ( box_size )
                cfg.scenario.box_size = *box_size;
            if ( seed )
                cfg.scenario.seed = *seed;
            if ( steps )
                cfg.scenario.total_steps = *steps;
            if ( !cost_name.empty() )
                cfg.costs.provider = parse_cost_provider( cost_name );
            if ( !weights.empty() )
            {
                const auto [wp, wc] = parse_weights( weights );
                cfg.costs.weights = { wp, wc };
            }
            const auto rep = cmd_run( cfg, out_dir );
            print_run_report( std::cout, rep );
            return rep.exit_code;
        }
        if ( *replay )
        {
            BalancePolicy policy;
            std::optional<Extent> grid;
            int ranks = replay_ranks.value_or( 0 );
            if ( !replay_config.empty() )
            {
                const auto cfg = load_run_config( replay_config );
                policy = cfg.policy;
                const BoxArray ba( cfg.scenario.domain, cfg.scenario.box_size );
                grid = ba.grid();
                if ( !replay_ranks )
                    ranks = cfg.scenario.n_ranks;
            }
            policy = apply_policy_flags( policy, replay_policy );
            if ( !grid_text.empty() )
                grid = parse_grid( grid_text );
            if ( !grid && policy.strategy != Strategy::Knapsack )
            {
                // Square grids need no flag.
                const auto trace = io::read_cost_trace( trace_path );
                const auto n = trace.front().size();
                const auto side = std::size_t( std::llround( std::sqrt( double( n ) ) ) );
                if ( side * side != n )
                    throw ConfigError( "curve strategies need --grid for " +
                                       std::to_string( n ) + " boxes" );
                grid = Extent{ int( side ), int( side ) };
            }
            const auto rep = cmd_replay( trace_path, mapping_path, policy, grid, ranks, replay_out );
            write_replay_csv( std::cout, rep );
            std::cerr << "policy " << rep.policy << ": " << rep.adoption_count
                      << " adoptions, mean efficiency " << io::format_double( rep.mean_efficiency )
                      << '\n';
            return exit_code::ok;
        }
        if ( *fit )
        {
            std::vector<double> e0;
            for ( const auto& s : e0_text )
                e0.push_back( parse_efficiency( s ) );
            print_fit_report( std::cout, cmd_fit( io::read_scaling_points( points_path ), e0 ) );
            return exit_code::ok;
        }
        if ( *compare )
        {
            print_compare_report( std::cout, cmd_compare( compare_dirs ) );
            return exit_code::ok;
        }
    }
    catch ( const IoError& e )
    {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code::io;
    }
    catch ( const std::exception& e )
    {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code::usage;
    }
    return exit_code::usage;
}
