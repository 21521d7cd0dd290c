#ifndef LBSIM_CONFIG_HPP
#define LBSIM_CONFIG_HPP

#include <lbsim/balancer.hpp>
#include <lbsim/cost.hpp>
#include <lbsim/error.hpp>
#include <lbsim/scenarios.hpp>
#include <lbsim/workload.hpp>

#include <json.hpp>

#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>

namespace lbsim
{

//! Everything one `run` needs: the workload, the balancing policy and the
//! cost provider.
struct RunConfig
{
    ScenarioConfig scenario = scenarios::expanding_blob();
    BalancePolicy policy = BalancePolicy::dynamic();
    CostSettings costs;

    void validate() const
    {
        scenario.validate();
        policy.validate();
        costs.weights.validate();
        costs.measured.validate();
        costs.instrumented.validate();
    }
};

namespace detail
{
using nlohmann::json;

// Reads fields of one JSON object, rejecting unknown keys and reporting the
// full dotted path of any malformed field.
class FieldReader
{
  public:
    FieldReader( const json& obj, std::string path )
        : _obj( obj )
        , _path( std::move( path ) )
    {
        if ( !obj.is_object() )
            fail( "", "expected an object" );
    }

    [[noreturn]] void fail( const std::string& key, const std::string& msg ) const
    {
        throw ConfigError( "config field '" + name( key ) + "': " + msg );
    }

    std::string name( const std::string& key ) const
    {
        if ( key.empty() )
            return _path.empty() ? "<root>" : _path;
        return _path.empty() ? key : _path + "." + key;
    }

    bool has( const std::string& key ) const
    {
        return _obj.contains( key ) && !_obj.at( key ).is_null();
    }
    bool present( const std::string& key ) const { return _obj.contains( key ); }
    const json& at( const std::string& key ) const { return _obj.at( key ); }

    void allow_only( std::initializer_list<const char*> keys ) const
    {
        std::set<std::string> ok( keys.begin(), keys.end() );
        for ( auto it = _obj.begin(); it != _obj.end(); ++it )
            if ( !ok.count( it.key() ) )
                fail( it.key(), "unknown field" );
    }

    void number( const std::string& key, double& out ) const
    {
        if ( !has( key ) )
            return;
        if ( !at( key ).is_number() )
            fail( key, "expected a number" );
        out = at( key ).get<double>();
    }

    template <class Int>
    void integer( const std::string& key, Int& out ) const
    {
        if ( !has( key ) )
            return;
        if ( !at( key ).is_number_integer() )
            fail( key, "expected an integer" );
        out = at( key ).get<Int>();
    }

    void string( const std::string& key, std::string& out ) const
    {
        if ( !has( key ) )
            return;
        if ( !at( key ).is_string() )
            fail( key, "expected a string" );
        out = at( key ).get<std::string>();
    }

    template <class T>
    void pair( const std::string& key, T& first, T& second ) const
    {
        if ( !has( key ) )
            return;
        const auto& v = at( key );
        if ( !v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number() )
            fail( key, "expected a two-element numeric array" );
        first = v[0].get<T>();
        second = v[1].get<T>();
    }

    FieldReader child( const std::string& key ) const { return { at( key ), name( key ) }; }

  private:
    const json& _obj;
    std::string _path;
};

template <class F>
auto with_field( const FieldReader& r, const std::string& key, F&& f )
{
    try
    {
        return f();
    }
    catch ( const ConfigError& e )
    {
        r.fail( key, e.what() );
    }
}

inline void read_scenario( const FieldReader& r, ScenarioConfig& c )
{
    r.allow_only( { "id", "domain", "box_size", "n_ranks", "blob", "kick", "total_steps",
                    "dt", "particles_per_marker", "true_weights", "compute_fraction",
                    "comm_cost_per_face", "gather_cost", "redistribute_latency",
                    "redistribute_cost_per_particle", "rank_capacity", "seed" } );
    r.string( "id", c.id );
    r.pair( "domain", c.domain.nz, c.domain.nx );
    r.integer( "box_size", c.box_size );
    r.integer( "n_ranks", c.n_ranks );
    r.integer( "total_steps", c.total_steps );
    r.number( "dt", c.dt );
    r.integer( "particles_per_marker", c.particles_per_marker );
    r.pair( "true_weights", c.true_weights.particle, c.true_weights.cell );
    r.number( "compute_fraction", c.compute_fraction );
    if ( r.present( "comm_cost_per_face" ) )
    {
        const auto& v = r.at( "comm_cost_per_face" );
        if ( v.is_null() || ( v.is_string() && v.get<std::string>() == "auto" ) )
            c.comm_cost_per_face.reset();
        else if ( v.is_number() )
            c.comm_cost_per_face = v.get<double>();
        else
            r.fail( "comm_cost_per_face", "expected a number or \"auto\"" );
    }
    r.number( "gather_cost", c.gather_cost );
    r.number( "redistribute_latency", c.redistribute_latency );
    r.number( "redistribute_cost_per_particle", c.redistribute_cost_per_particle );
    if ( r.present( "rank_capacity" ) )
    {
        if ( r.at( "rank_capacity" ).is_null() )
            c.rank_capacity.reset();
        else
        {
            std::int64_t cap = 0;
            r.integer( "rank_capacity", cap );
            c.rank_capacity = cap;
        }
    }
    if ( r.has( "seed" ) )
        r.integer( "seed", c.seed );

    if ( r.has( "blob" ) )
    {
        const auto b = r.child( "blob" );
        b.allow_only( { "center", "core_radius", "edge_scale_length", "particles_per_cell",
                        "background_per_cell" } );
        b.pair( "center", c.blob.center_z, c.blob.center_x );
        b.number( "core_radius", c.blob.core_radius );
        b.number( "edge_scale_length", c.blob.edge_scale_length );
        b.number( "particles_per_cell", c.blob.particles_per_cell );
        b.number( "background_per_cell", c.blob.background_per_cell );
    }
    if ( r.has( "kick" ) )
    {
        const auto k = r.child( "kick" );
        k.allow_only( { "step", "speed", "drift_z" } );
        k.integer( "step", c.kick.step );
        k.number( "speed", c.kick.speed );
        k.number( "drift_z", c.kick.drift_z );
    }
}

inline void read_policy( const FieldReader& r, BalancePolicy& p )
{
    r.allow_only( { "mode", "strategy", "interval", "static_step", "threshold",
                    "threshold_mode", "knapsack_cap_factor" } );
    std::string mode = p.interval ? "dynamic" : ( p.forced_step ? "static" : "none" );
    r.string( "mode", mode );
    if ( r.has( "strategy" ) )
    {
        std::string s;
        r.string( "strategy", s );
        p.strategy = with_field( r, "strategy", [&] { return parse_strategy( s ); } );
    }
    std::int64_t interval = p.interval.value_or( 10 );
    std::int64_t static_step = p.forced_step.value_or( 0 );
    r.integer( "interval", interval );
    r.integer( "static_step", static_step );
    r.number( "threshold", p.improvement_threshold );
    r.number( "knapsack_cap_factor", p.knapsack_cap_factor );
    if ( r.has( "threshold_mode" ) )
    {
        std::string m;
        r.string( "threshold_mode", m );
        if ( m == "relative" )
            p.threshold_mode = ThresholdMode::Relative;
        else if ( m == "absolute" )
            p.threshold_mode = ThresholdMode::Absolute;
        else
            r.fail( "threshold_mode", "expected \"relative\" or \"absolute\"" );
    }

    if ( mode == "none" )
    {
        p.interval.reset();
        p.forced_step.reset();
    }
    else if ( mode == "static" )
    {
        p.interval.reset();
        p.forced_step = static_step;
    }
    else if ( mode == "dynamic" )
    {
        p.interval = interval;
        p.forced_step.reset();
    }
    else
        r.fail( "mode", "expected none, static or dynamic" );
}

inline void read_measurement( const FieldReader& r, MeasurementConfig& m )
{
    r.allow_only( { "noise_amplitude", "overhead_factor" } );
    r.number( "noise_amplitude", m.noise_amplitude );
    r.number( "overhead_factor", m.overhead_factor );
}

inline void read_costs( const FieldReader& r, CostSettings& c )
{
    r.allow_only( { "provider", "weights", "measured", "instrumented" } );
    if ( r.has( "provider" ) )
    {
        std::string s;
        r.string( "provider", s );
        c.provider = with_field( r, "provider", [&] { return parse_cost_provider( s ); } );
    }
    r.pair( "weights", c.weights.particle, c.weights.cell );
    if ( r.has( "measured" ) )
        read_measurement( r.child( "measured" ), c.measured );
    if ( r.has( "instrumented" ) )
        read_measurement( r.child( "instrumented" ), c.instrumented );
}
} // namespace detail

/*!
  Parse a run configuration. Absent fields keep their defaults; when
  `scenario.base` names a built-in scenario, that scenario supplies the
  defaults for the other scenario fields.
*/
inline RunConfig parse_run_config( const std::string& text )
{
    using nlohmann::json;
    json root;
    try
    {
        root = json::parse( text );
    }
    catch ( const json::parse_error& e )
    {
        throw ConfigError( std::string( "config is not valid JSON: " ) + e.what() );
    }

    RunConfig cfg;
    const detail::FieldReader r( root, "" );
    r.allow_only( { "scenario", "policy", "cost" } );
    try
    {
        if ( r.has( "scenario" ) )
        {
            json sc = r.at( "scenario" );
            if ( sc.is_object() && sc.contains( "base" ) )
            {
                if ( !sc["base"].is_string() )
                    r.fail( "scenario.base", "expected a string" );
                cfg.scenario = scenarios::by_name( sc["base"].get<std::string>() );
                sc.erase( "base" );
            }
            detail::read_scenario( detail::FieldReader( sc, "scenario" ), cfg.scenario );
        }
        if ( r.has( "policy" ) )
            detail::read_policy( r.child( "policy" ), cfg.policy );
        if ( r.has( "cost" ) )
            detail::read_costs( r.child( "cost" ), cfg.costs );
    }
    catch ( const json::exception& e )
    {
        throw ConfigError( std::string( "config: " ) + e.what() );
    }
    cfg.validate();
    return cfg;
}

inline RunConfig load_run_config( const std::string& path )
{
    std::ifstream in( path );
    if ( !in )
        throw IoError( "cannot read config file '" + path + "'" );
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config( ss.str() );
}

inline nlohmann::json to_json( const RunConfig& cfg )
{
    using nlohmann::json;
    const auto& s = cfg.scenario;
    json sc = {
        { "id", s.id },
        { "domain", { s.domain.nz, s.domain.nx } },
        { "box_size", s.box_size },
        { "n_ranks", s.n_ranks },
        { "blob",
          { { "center", { s.blob.center_z, s.blob.center_x } },
            { "core_radius", s.blob.core_radius },
            { "edge_scale_length", s.blob.edge_scale_length },
            { "particles_per_cell", s.blob.particles_per_cell },
            { "background_per_cell", s.blob.background_per_cell } } },
        { "kick", { { "step", s.kick.step }, { "speed", s.kick.speed },
                    { "drift_z", s.kick.drift_z } } },
        { "total_steps", s.total_steps },
        { "dt", s.dt },
        { "particles_per_marker", s.particles_per_marker },
        { "true_weights", { s.true_weights.particle, s.true_weights.cell } },
        { "compute_fraction", s.compute_fraction },
        { "gather_cost", s.gather_cost },
        { "redistribute_latency", s.redistribute_latency },
        { "redistribute_cost_per_particle", s.redistribute_cost_per_particle },
        { "seed", s.seed },
    };
    if ( s.comm_cost_per_face )
        sc["comm_cost_per_face"] = *s.comm_cost_per_face;
    else
        sc["comm_cost_per_face"] = "auto";
    sc["rank_capacity"] = s.rank_capacity ? json( *s.rank_capacity ) : json( nullptr );

    const auto& p = cfg.policy;
    json pol = {
        { "mode", p.interval ? "dynamic" : ( p.forced_step ? "static" : "none" ) },
        { "strategy", to_string( p.strategy ) },
        { "interval", p.interval.value_or( 10 ) },
        { "static_step", p.forced_step.value_or( 0 ) },
        { "threshold", p.improvement_threshold },
        { "threshold_mode",
          p.threshold_mode == ThresholdMode::Relative ? "relative" : "absolute" },
        { "knapsack_cap_factor", p.knapsack_cap_factor },
    };

    const auto& c = cfg.costs;
    auto meas = []( const MeasurementConfig& m ) {
        return json{ { "noise_amplitude", m.noise_amplitude },
                     { "overhead_factor", m.overhead_factor } };
    };
    json cost = {
        { "provider", to_string( c.provider ) },
        { "weights", { c.weights.particle, c.weights.cell } },
        { "measured", meas( c.measured ) },
        { "instrumented", meas( c.instrumented ) },
    };
    return json{ { "scenario", sc }, { "policy", pol }, { "cost", cost } };
}

} // namespace lbsim

#endif // LBSIM_CONFIG_HPP
