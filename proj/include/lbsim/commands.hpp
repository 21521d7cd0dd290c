#ifndef LBSIM_COMMANDS_HPP
#define LBSIM_COMMANDS_HPP

#include <lbsim/balancer.hpp>
#include <lbsim/config.hpp>
#include <lbsim/decomposition.hpp>
#include <lbsim/error.hpp>
#include <lbsim/io.hpp>
#include <lbsim/perfmodel.hpp>
#include <lbsim/workload.hpp>

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace lbsim
{

namespace exit_code
{
inline constexpr int ok = 0;
inline constexpr int usage = 1;
inline constexpr int io = 2;
inline constexpr int oom = 3;
} // namespace exit_code

struct RunReport
{
    std::string scenario_id;
    std::string policy;
    std::string metrics_path;
    RunSummary summary;
    int exit_code = exit_code::ok;
};

namespace detail
{
inline void ensure_dir( const std::string& dir )
{
    std::error_code ec;
    std::filesystem::create_directories( dir, ec );
    if ( ec || !std::filesystem::is_directory( dir ) )
        throw IoError( "cannot create output directory '" + dir + "'" );
}

inline std::string join( const std::string& dir, const std::string& name )
{
    return ( std::filesystem::path( dir ) / name ).string();
}

inline nlohmann::json summary_json( const RunConfig& cfg, const RunSummary& s )
{
    return {
        { "scenario_id", cfg.scenario.id },
        { "policy", cfg.policy.describe() },
        { "cost_provider", to_string( cfg.costs.provider ) },
        { "total_steps", cfg.scenario.total_steps },
        { "steps_executed", s.steps_executed },
        { "completion_fraction", s.completion_fraction },
        { "oom", s.oom },
        { "oom_step", s.oom ? nlohmann::json( s.oom_step ) : nlohmann::json( nullptr ) },
        { "total_walltime", s.total_walltime },
        { "mean_efficiency", s.mean_efficiency },
        { "adoption_count", s.adoption_count },
        { "attempt_count", s.attempt_count },
        { "total_gather", s.total_gather },
        { "total_redistribute", s.total_redistribute },
        { "comm_cost_per_face", s.comm_cost_per_face },
    };
}
} // namespace detail

/*!
  Run one scenario and write its outputs into out_dir:
  metrics.csv, costs.csv, mapping.csv, initial_mapping.csv, summary.json and
  config.json (the fully resolved configuration).
*/
inline RunReport cmd_run( const RunConfig& cfg, const std::string& out_dir )
{
    cfg.validate();
    detail::ensure_dir( out_dir );
    const RunResult r = run_simulation( cfg.scenario, cfg.policy, cfg.costs );

    RunReport rep;
    rep.scenario_id = cfg.scenario.id;
    rep.policy = cfg.policy.describe();
    rep.metrics_path = detail::join( out_dir, "metrics.csv" );
    rep.summary = r.summary;
    rep.exit_code = r.summary.oom ? exit_code::oom : exit_code::ok;

    std::ostringstream metrics, costs, mapping, initial;
    io::write_metrics_csv( metrics, r.steps );
    io::write_cost_trace_csv( costs, r.cost_trace );
    io::write_mapping_csv( mapping, r.mappings );
    io::write_mapping_csv( initial, { MappingSnapshot{ 0, r.initial_mapping } } );

    io::write_file( rep.metrics_path, metrics.str() );
    io::write_file( detail::join( out_dir, "costs.csv" ), costs.str() );
    io::write_file( detail::join( out_dir, "mapping.csv" ), mapping.str() );
    io::write_file( detail::join( out_dir, "initial_mapping.csv" ), initial.str() );
    io::write_file( detail::join( out_dir, "summary.json" ),
                    detail::summary_json( cfg, r.summary ).dump( 2 ) + "\n" );
    io::write_file( detail::join( out_dir, "config.json" ), to_json( cfg ).dump( 2 ) + "\n" );
    return rep;
}

inline void print_run_report( std::ostream& os, const RunReport& rep )
{
    const auto& s = rep.summary;
    os << "scenario        " << rep.scenario_id << '\n'
       << "policy          " << rep.policy << '\n'
       << "steps           " << s.steps_executed << " (completion "
       << io::format_double( s.completion_fraction ) << ")\n"
       << "walltime        " << io::format_double( s.total_walltime ) << '\n'
       << "mean efficiency " << io::format_double( s.mean_efficiency ) << '\n'
       << "adoptions       " << s.adoption_count << " of " << s.attempt_count
       << " attempts\n";
    if ( s.oom )
        os << "OOM             rank capacity exceeded at step " << s.oom_step << '\n';
    os << "metrics         " << rep.metrics_path << '\n';
}

//---------------------------------------------------------------------------//
// Replay
//---------------------------------------------------------------------------//
struct ReplayStep
{
    std::int64_t step = 0;
    double eff_before = 1.0;
    double eff_after = 1.0;
    bool attempted = false;
    bool adopted = false;
};

struct ReplayReport
{
    std::string policy;
    std::vector<ReplayStep> steps;
    std::int64_t adoption_count = 0;
    double mean_efficiency = 0.0;
};

inline constexpr std::string_view replay_header = "step,eff_before,eff_after,adopted";

/*!
  Apply the rebalancing routine to a recorded cost trace, starting from the
  given mapping. box_grid is the box layout, used by the curve strategies;
  when unset, box id order is the curve.
*/
inline ReplayReport replay_trace( const std::vector<CostVector>& trace,
                                  const DistributionMapping& initial,
                                  const BalancePolicy& policy,
                                  std::optional<Extent> box_grid = std::nullopt )
{
    policy.validate();
    if ( trace.empty() )
        throw ContractError( "replay: empty trace" );
    if ( trace.front().size() != initial.size() )
        throw ContractError( "replay: trace has " + std::to_string( trace.front().size() ) +
                             " boxes but the mapping has " + std::to_string( initial.size() ) );
    std::vector<BoxId> curve;
    if ( box_grid )
    {
        const BoxArray grid( *box_grid, 1 );
        if ( grid.size() != initial.size() )
            throw ConfigError( "replay: grid " + std::to_string( box_grid->nz ) + "x" +
                               std::to_string( box_grid->nx ) + " does not hold " +
                               std::to_string( initial.size() ) + " boxes" );
        curve = morton_order( grid );
    }

    ReplayReport rep;
    rep.policy = policy.describe();
    DistributionMapping dm = initial;
    double sum = 0.0;
    for ( const auto& cv : trace )
    {
        const auto out = attempt_rebalance( cv, dm, policy, cv.step, curve );
        ReplayStep s;
        s.step = cv.step;
        s.eff_before = out.efficiency_current;
        s.attempted = out.attempted;
        s.adopted = out.adopted;
        s.eff_after = out.adopted ? out.efficiency_proposed : out.efficiency_current;
        if ( out.adopted )
        {
            dm = out.proposed;
            ++rep.adoption_count;
        }
        sum += s.eff_after;
        rep.steps.push_back( s );
    }
    rep.mean_efficiency = sum / double( rep.steps.size() );
    return rep;
}

inline void write_replay_csv( std::ostream& os, const ReplayReport& rep )
{
    os << replay_header << '\n';
    for ( const auto& s : rep.steps )
        os << s.step << ',' << io::format_double( s.eff_before ) << ','
           << io::format_double( s.eff_after ) << ',' << ( s.adopted ? 1 : 0 ) << '\n';
}

//! File-level replay: reads the trace and the first snapshot of the mapping
//! file, and writes replay.csv into out_dir when it is non-empty.
inline ReplayReport cmd_replay( const std::string& trace_path, const std::string& mapping_path,
                                const BalancePolicy& policy, std::optional<Extent> box_grid,
                                int n_ranks, const std::string& out_dir )
{
    const auto trace = io::read_cost_trace( trace_path );
    const auto snaps = io::read_mappings( mapping_path, n_ranks );
    const auto rep = replay_trace( trace, snaps.front().mapping, policy, box_grid );
    if ( !out_dir.empty() )
    {
        detail::ensure_dir( out_dir );
        std::ostringstream os;
        write_replay_csv( os, rep );
        io::write_file( detail::join( out_dir, "replay.csv" ), os.str() );
    }
    return rep;
}

//---------------------------------------------------------------------------//
// Fit
//---------------------------------------------------------------------------//
struct FitReport
{
    ScalingModel model;
    std::vector<std::pair<double, double>> speedups; // (E0, S)
};

inline FitReport cmd_fit( const std::vector<ScalingPoint>& points,
                          const std::vector<double>& initial_efficiencies )
{
    FitReport rep;
    rep.model = fit_scaling( points );
    for ( double e0 : initial_efficiencies )
        rep.speedups.emplace_back( e0, max_speedup( e0, rep.model.exponent ) );
    return rep;
}

inline void print_fit_report( std::ostream& os, const FitReport& rep )
{
    char buf[128];
    std::snprintf( buf, sizeof( buf ), "x        %.6f\n", rep.model.exponent );
    os << buf;
    std::snprintf( buf, sizeof( buf ), "residual %.3e\n", rep.model.residual );
    os << buf;
    if ( !rep.model.in_sanity_band() )
        os << "warning: exponent outside [0, 1.2]\n";
    for ( const auto& [e0, s] : rep.speedups )
    {
        std::snprintf( buf, sizeof( buf ), "E0 %.6g  S %.4f\n", e0, s );
        os << buf;
    }
}

//---------------------------------------------------------------------------//
// Compare
//---------------------------------------------------------------------------//
struct CompareRow
{
    std::string dir;
    std::string policy;
    bool oom = false;
    double walltime = 0.0;
    double mean_efficiency = 0.0;
    double speedup = 1.0;
};

struct CompareReport
{
    std::string scenario_id;
    //! Steps [0, window) enter every row.
    std::int64_t window = 0;
    bool truncated = false;
    std::vector<CompareRow> rows;
};

/*!
  Compare run output directories over their common completed step range.
  A run that hit OOM contributes only the steps before the failing one, and
  the window then shrinks for every run.
*/
inline CompareReport cmd_compare( const std::vector<std::string>& dirs )
{
    if ( dirs.size() < 2 )
        throw ConfigError( "compare: need at least 2 run directories" );

    struct Loaded
    {
        std::string policy;
        bool oom = false;
        std::int64_t total_steps = 0;
        std::vector<StepMetrics> metrics;
    };
    std::vector<Loaded> runs;
    CompareReport rep;
    for ( const auto& dir : dirs )
    {
        const auto path = detail::join( dir, "summary.json" );
        std::ifstream in( path );
        if ( !in )
            throw IoError( "cannot read '" + path + "'" );
        nlohmann::json j;
        try
        {
            in >> j;
        }
        catch ( const nlohmann::json::exception& e )
        {
            throw ContractError( path + ": " + e.what() );
        }
        Loaded l;
        std::string id;
        try
        {
            id = j.at( "scenario_id" ).get<std::string>();
            l.policy = j.at( "policy" ).get<std::string>();
            l.oom = j.at( "oom" ).get<bool>();
            l.total_steps = j.at( "total_steps" ).get<std::int64_t>();
        }
        catch ( const nlohmann::json::exception& e )
        {
            throw ContractError( path + ": " + e.what() );
        }
        if ( runs.empty() )
            rep.scenario_id = id;
        else if ( id != rep.scenario_id )
            throw ConfigError( "compare: scenario mismatch, '" + dirs.front() + "' ran '" +
                               rep.scenario_id + "' but '" + dir + "' ran '" + id + "'" );
        l.metrics = io::read_metrics( detail::join( dir, "metrics.csv" ) );
        runs.push_back( std::move( l ) );
    }

    rep.window = runs.front().total_steps;
    for ( const auto& l : runs )
    {
        std::int64_t completed = std::int64_t( l.metrics.size() );
        if ( l.oom && completed > 0 )
            --completed;
        rep.window = std::min( rep.window, completed );
        rep.truncated = rep.truncated || l.oom || completed < l.total_steps;
    }
    if ( rep.window <= 0 )
        throw ContractError( "compare: no common completed steps" );

    for ( std::size_t i = 0; i < runs.size(); ++i )
    {
        CompareRow row;
        row.dir = dirs[i];
        row.policy = runs[i].policy;
        row.oom = runs[i].oom;
        double eff = 0.0;
        for ( std::int64_t s = 0; s < rep.window; ++s )
        {
            row.walltime += runs[i].metrics[std::size_t( s )].walltime;
            eff += runs[i].metrics[std::size_t( s )].eff_after;
        }
        row.mean_efficiency = eff / double( rep.window );
        rep.rows.push_back( row );
    }
    for ( auto& row : rep.rows )
        row.speedup = rep.rows.front().walltime / row.walltime;
    return rep;
}

inline void print_compare_report( std::ostream& os, const CompareReport& rep )
{
    os << "scenario " << rep.scenario_id << ", steps [0, " << rep.window << ")";
    if ( rep.truncated )
        os << " (truncated: not every run completed)";
    os << '\n';
    char buf[256];
    std::snprintf( buf, sizeof( buf ), "%-14s %-10s %-8s %-5s %s\n", "walltime", "mean_eff",
                   "speedup", "oom", "run" );
    os << buf;
    for ( const auto& r : rep.rows )
    {
        std::snprintf( buf, sizeof( buf ), "%-14.6e %-10.4f %-8.3f %-5s %s [%s]\n",
                       r.walltime, r.mean_efficiency, r.speedup, r.oom ? "yes" : "no",
                       r.dir.c_str(), r.policy.c_str() );
        os << buf;
    }
}

} // namespace lbsim

#endif // LBSIM_COMMANDS_HPP
