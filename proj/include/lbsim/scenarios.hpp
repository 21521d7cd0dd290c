#ifndef LBSIM_SCENARIOS_HPP
#define LBSIM_SCENARIOS_HPP

#include <lbsim/error.hpp>
#include <lbsim/workload.hpp>

#include <string>
#include <vector>

namespace lbsim::scenarios
{

/*!
  Dense target expanding after a radial kick: 960 x 960 cells in 900 boxes
  of 32 x 32 on 24 ranks for 2000 steps. The target sits one third of the
  way along z, like the reference laser-ion setup, and a slow drift along z
  pushes the expanding ring downstream.
*/
inline ScenarioConfig expanding_blob()
{
    ScenarioConfig c;
    c.id = "expanding_blob";
    c.domain = { 960, 960 };
    c.box_size = 32;
    c.n_ranks = 24;
    c.blob.center_z = 320.0;
    c.blob.center_x = 480.0;
    c.blob.core_radius = 120.0;
    c.blob.edge_scale_length = 16.0;
    c.blob.particles_per_cell = 2.0;
    c.kick.step = 50;
    c.kick.speed = 0.12;
    c.kick.drift_z = 0.05;
    c.total_steps = 2000;
    c.particles_per_marker = 64;
    c.true_weights = HeuristicWeights::standard();
    c.compute_fraction = 0.5;
    c.gather_cost = 2000.0;
    c.redistribute_latency = 1000.0;
    c.redistribute_cost_per_particle = 0.12;
    c.seed = 20210501;
    return c;
}

/*!
  Small target straddling the border of two rank regions of the initial
  mapping and drifting into one of them. Without rebalancing that rank
  exceeds its particle capacity early in the run.
*/
inline ScenarioConfig memory_limited()
{
    ScenarioConfig c;
    c.id = "memory_limited";
    c.domain = { 256, 256 };
    c.box_size = 8;
    c.n_ranks = 16;
    c.blob.center_z = 64.0;
    c.blob.center_x = 96.0;
    c.blob.core_radius = 24.0;
    c.blob.edge_scale_length = 2.0;
    c.blob.particles_per_cell = 2.0;
    c.kick.step = 0;
    c.kick.speed = 0.002;
    c.kick.drift_z = 0.02;
    c.total_steps = 1000;
    c.particles_per_marker = 16;
    c.gather_cost = 100.0;
    c.redistribute_latency = 100.0;
    c.redistribute_cost_per_particle = 0.12;
    c.rank_capacity = 45000;
    c.seed = 20210501;
    return c;
}

inline std::vector<std::string> names()
{
    return { "expanding_blob", "memory_limited" };
}

inline ScenarioConfig by_name( const std::string& name )
{
    if ( name == "expanding_blob" )
        return expanding_blob();
    if ( name == "memory_limited" )
        return memory_limited();
    throw ConfigError( "unknown scenario '" + name +
                       "' (known: expanding_blob, memory_limited)" );
}

} // namespace lbsim::scenarios

#endif // LBSIM_SCENARIOS_HPP
