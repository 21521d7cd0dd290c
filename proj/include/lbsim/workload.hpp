#ifndef LBSIM_WORKLOAD_HPP
#define LBSIM_WORKLOAD_HPP

#include <lbsim/balancer.hpp>
#include <lbsim/cost.hpp>
#include <lbsim/decomposition.hpp>
#include <lbsim/error.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace lbsim
{

//---------------------------------------------------------------------------//
// Scenario configuration
//
// Lengths are in cell widths, velocities in cells per step, and every cost
// is expressed in modeled time units: one unit is the time to process one
// unit of true work (the ground-truth weighted particle + cell sum).
//---------------------------------------------------------------------------//

//! Dense target: uniform core with an exponentially decaying edge.
struct BlobConfig
{
    double center_z = 0.0;
    double center_x = 0.0;
    double core_radius = 0.0;
    //! e-folding length of the density beyond the core; 0 gives a sharp edge.
    double edge_scale_length = 0.0;
    double particles_per_cell = 0.0;
    //! Uniform density filling the whole domain.
    double background_per_cell = 0.0;
};

//! Outward radial kick plus a drift along z, applied once.
struct KickConfig
{
    std::int64_t step = 0;
    double speed = 0.0;
    double drift_z = 0.0;
};

struct ScenarioConfig
{
    std::string id = "scenario";
    Extent domain{ 64, 64 };
    int box_size = 16;
    int n_ranks = 4;
    BlobConfig blob;
    KickConfig kick;
    std::int64_t total_steps = 100;
    double dt = 1.0;
    //! Physical particles represented by one simulated marker. Work, memory
    //! and redistribution are charged per physical particle.
    std::int64_t particles_per_marker = 1;

    //! Ground-truth per-particle and per-cell work, independent of the
    //! weights a heuristic cost provider assumes.
    HeuristicWeights true_weights = HeuristicWeights::standard();

    //! Share of a perfectly balanced step spent in compute.
    double compute_fraction = 0.5;
    //! Cost per off-rank box face. Unset: calibrated so that, on the
    //! compute-balanced knapsack mapping of the initial state, communication
    //! equals compute * (1 - compute_fraction) / compute_fraction.
    std::optional<double> comm_cost_per_face;
    double gather_cost = 0.0;
    double redistribute_latency = 0.0;
    double redistribute_cost_per_particle = 0.0;
    //! Per-rank particle capacity; unset means unlimited memory.
    std::optional<std::int64_t> rank_capacity;

    std::uint64_t seed = 0;

    void validate() const
    {
        detail::require( domain.nz >= 1 && domain.nx >= 1, "domain extents must be >= 1" );
        detail::require( box_size >= 1, "box_size must be >= 1" );
        detail::require( n_ranks >= 1, "n_ranks must be >= 1" );
        detail::require( total_steps >= 1, "total_steps must be >= 1" );
        detail::require( dt > 0.0, "dt must be positive" );
        detail::require( particles_per_marker >= 1, "particles_per_marker must be >= 1" );
        detail::require( blob.core_radius >= 0.0, "blob.core_radius must be >= 0" );
        detail::require( blob.edge_scale_length >= 0.0,
                         "blob.edge_scale_length must be >= 0" );
        detail::require( blob.particles_per_cell >= 0.0,
                         "blob.particles_per_cell must be >= 0" );
        detail::require( blob.background_per_cell >= 0.0,
                         "blob.background_per_cell must be >= 0" );
        detail::require( kick.step >= 0, "kick.step must be >= 0" );
        detail::require( kick.speed >= 0.0, "kick.speed must be >= 0" );
        detail::require( compute_fraction > 0.0 && compute_fraction <= 1.0,
                         "compute_fraction must lie in (0, 1]" );
        detail::require( !comm_cost_per_face || *comm_cost_per_face >= 0.0,
                         "comm_cost_per_face must be >= 0" );
        detail::require( gather_cost >= 0.0, "gather_cost must be >= 0" );
        detail::require( redistribute_latency >= 0.0, "redistribute_latency must be >= 0" );
        detail::require( redistribute_cost_per_particle >= 0.0,
                         "redistribute_cost_per_particle must be >= 0" );
        detail::require( !rank_capacity || *rank_capacity >= 0,
                         "rank_capacity must be >= 0" );
        true_weights.validate();
        // Throws with the offending axis when box_size does not divide.
        (void)BoxArray( domain, box_size );
    }
};

//---------------------------------------------------------------------------//
// Workload state
//---------------------------------------------------------------------------//
struct WorkloadState
{
    BoxArray boxes;
    std::vector<double> z;
    std::vector<double> x;
    std::vector<double> vz;
    std::vector<double> vx;
    std::int64_t step = 0;
    //! Derived from positions by recount().
    std::vector<std::int64_t> per_box_particles;

    std::size_t num_particles() const { return z.size(); }

    void recount()
    {
        per_box_particles.assign( boxes.size(), 0 );
        const int m = boxes.box_size();
        const int nbx = boxes.grid().nx;
        for ( std::size_t p = 0; p < z.size(); ++p )
        {
            const int bz = int( z[p] ) / m;
            const int bx = int( x[p] ) / m;
            ++per_box_particles[std::size_t( bz * nbx + bx )];
        }
    }
};

namespace detail
{
inline double unit_uniform( std::mt19937_64& rng )
{
    return double( rng() >> 11 ) * 0x1.0p-53;
}

inline bool inside( const Extent& d, double z, double x )
{
    return z >= 0.0 && x >= 0.0 && z < double( d.nz ) && x < double( d.nx );
}

// Particles drawn for one cell: floor(density) plus one with probability
// equal to the fractional part.
inline int draw_count( std::mt19937_64& rng, double density )
{
    const double whole = std::floor( density );
    int n = int( whole );
    if ( unit_uniform( rng ) < density - whole )
        ++n;
    return n;
}
} // namespace detail

/*!
  Seeded initial particle distribution. Inside the core every cell receives
  particles_per_cell particles on average at uniform random positions;
  beyond it a candidate at radius r is kept with probability
  exp(-(r - core_radius) / edge_scale_length). Velocities start at zero.
*/
inline WorkloadState init_scenario( const ScenarioConfig& cfg )
{
    cfg.validate();
    WorkloadState s;
    s.boxes = BoxArray( cfg.domain, cfg.box_size );
    std::mt19937_64 rng( cfg.seed );

    const auto& b = cfg.blob;
    auto add = [&]( double z, double x ) {
        s.z.push_back( z );
        s.x.push_back( x );
    };

    if ( b.particles_per_cell > 0.0 && ( b.core_radius > 0.0 || b.edge_scale_length > 0.0 ) )
    {
        // Beyond 20 scale lengths the acceptance is below 1e-8.
        const double reach = b.core_radius + 20.0 * b.edge_scale_length;
        const int z0 = std::max( 0, int( std::floor( b.center_z - reach ) ) );
        const int z1 = std::min( cfg.domain.nz - 1, int( std::ceil( b.center_z + reach ) ) );
        const int x0 = std::max( 0, int( std::floor( b.center_x - reach ) ) );
        const int x1 = std::min( cfg.domain.nx - 1, int( std::ceil( b.center_x + reach ) ) );
        for ( int iz = z0; iz <= z1; ++iz )
            for ( int ix = x0; ix <= x1; ++ix )
            {
                const int n = detail::draw_count( rng, b.particles_per_cell );
                for ( int k = 0; k < n; ++k )
                {
                    const double pz = iz + detail::unit_uniform( rng );
                    const double px = ix + detail::unit_uniform( rng );
                    const double r = std::hypot( pz - b.center_z, px - b.center_x );
                    if ( r <= b.core_radius )
                    {
                        add( pz, px );
                        continue;
                    }
                    if ( b.edge_scale_length <= 0.0 )
                        continue;
                    const double keep = std::exp( -( r - b.core_radius ) / b.edge_scale_length );
                    if ( detail::unit_uniform( rng ) < keep )
                        add( pz, px );
                }
            }
    }

    if ( b.background_per_cell > 0.0 )
        for ( int iz = 0; iz < cfg.domain.nz; ++iz )
            for ( int ix = 0; ix < cfg.domain.nx; ++ix )
            {
                const int n = detail::draw_count( rng, b.background_per_cell );
                for ( int k = 0; k < n; ++k )
                    add( iz + detail::unit_uniform( rng ), ix + detail::unit_uniform( rng ) );
            }

    if ( s.z.empty() )
        throw ConfigError( "init_scenario: configuration produces zero particles" );

    s.vz.assign( s.z.size(), 0.0 );
    s.vx.assign( s.z.size(), 0.0 );
    s.recount();
    return s;
}

/*!
  Perform timestep state.step. At the kick step every particle gets an
  outward radial velocity (speed times a per-particle factor in [0.5, 1.5])
  plus the axial drift. Particles leaving the domain are absorbed.
*/
inline WorkloadState advance( WorkloadState state, const ScenarioConfig& cfg )
{
    if ( state.step >= cfg.total_steps )
        throw ContractError( "advance: step " + std::to_string( state.step ) +
                             " is past the end of the run" );

    if ( state.step == cfg.kick.step )
    {
        std::mt19937_64 rng( detail::mix64( cfg.seed ^ 0x6b69636bull ) );
        for ( std::size_t p = 0; p < state.z.size(); ++p )
        {
            const double dz = state.z[p] - cfg.blob.center_z;
            const double dx = state.x[p] - cfg.blob.center_x;
            const double r = std::hypot( dz, dx );
            const double speed = cfg.kick.speed * ( 0.5 + detail::unit_uniform( rng ) );
            const double uz = r > 0.0 ? dz / r : 0.0;
            const double ux = r > 0.0 ? dx / r : 0.0;
            state.vz[p] = speed * uz + cfg.kick.drift_z;
            state.vx[p] = speed * ux;
        }
    }

    std::size_t kept = 0;
    for ( std::size_t p = 0; p < state.z.size(); ++p )
    {
        const double nz = state.z[p] + state.vz[p] * cfg.dt;
        const double nx = state.x[p] + state.vx[p] * cfg.dt;
        if ( !detail::inside( cfg.domain, nz, nx ) )
            continue;
        state.z[kept] = nz;
        state.x[kept] = nx;
        state.vz[kept] = state.vz[p];
        state.vx[kept] = state.vx[p];
        ++kept;
    }
    state.z.resize( kept );
    state.x.resize( kept );
    state.vz.resize( kept );
    state.vx.resize( kept );

    ++state.step;
    state.recount();
    return state;
}

//! Physical particle count of every box.
inline std::vector<std::int64_t> particles_per_box( const WorkloadState& state,
                                                    const ScenarioConfig& cfg )
{
    std::vector<std::int64_t> out( state.per_box_particles );
    for ( auto& n : out )
        n *= cfg.particles_per_marker;
    return out;
}

//! Ground-truth work of every box.
inline std::vector<double> true_work( const WorkloadState& state, const ScenarioConfig& cfg )
{
    std::vector<double> work( state.boxes.size() );
    for ( std::size_t b = 0; b < work.size(); ++b )
        work[b] = cfg.true_weights.particle *
                      double( state.per_box_particles[b] * cfg.particles_per_marker ) +
                  cfg.true_weights.cell * double( state.boxes[BoxId( b )].num_cells() );
    return work;
}

inline std::vector<std::int64_t> cells_per_box( const BoxArray& ba )
{
    std::vector<std::int64_t> cells( ba.size() );
    for ( std::size_t b = 0; b < cells.size(); ++b )
        cells[b] = ba[BoxId( b )].num_cells();
    return cells;
}

//! Physical particles held by every rank.
inline std::vector<std::int64_t> rank_particles( const WorkloadState& state,
                                                 const ScenarioConfig& cfg,
                                                 const DistributionMapping& dm )
{
    std::vector<std::int64_t> out( std::size_t( dm.n_ranks() ), 0 );
    for ( std::size_t b = 0; b < state.per_box_particles.size(); ++b )
        out[std::size_t( dm[BoxId( b )] )] +=
            state.per_box_particles[b] * cfg.particles_per_marker;
    return out;
}

//---------------------------------------------------------------------------//
// Walltime model
//---------------------------------------------------------------------------//
struct StepMetrics
{
    std::int64_t step = 0;
    double eff_before = 1.0;
    double eff_after = 1.0;
    bool attempted = false;
    bool adopted = false;
    double compute_max = 0.0;
    //! Mean rank compute; not part of the CSV schema.
    double compute_avg = 0.0;
    double comm_max = 0.0;
    double gather = 0.0;
    double redistribute = 0.0;
    double walltime = 0.0;
    std::int64_t max_rank_particles = 0;
    bool oom = false;
};

/*!
  Compose one step's modeled walltime.

  compute is the slowest rank's true work, comm the largest per-rank count
  of off-rank box faces times the per-face cost, gather is charged on every
  attempt and redistribution on every adoption (latency plus a per-particle
  charge for each particle whose box changed owner). Every component is
  multiplied by overhead_factor, and walltime is their sum.
*/
inline StepMetrics step_walltime( std::span<const double> rank_compute,
                                  const DistributionMapping& dm, const BoxArray& ba,
                                  const BalanceOutcome& outcome,
                                  const DistributionMapping& prev_dm,
                                  const WorkloadState& state, const ScenarioConfig& cfg,
                                  double overhead_factor = 1.0 )
{
    if ( dm.size() != ba.size() || prev_dm.size() != ba.size() )
        throw ContractError( "step_walltime: mapping does not match box array" );

    StepMetrics m;
    m.step = state.step;
    m.attempted = outcome.attempted;
    m.adopted = outcome.adopted;
    m.eff_before = outcome.efficiency_current;
    m.eff_after = outcome.adopted ? outcome.efficiency_proposed : outcome.efficiency_current;

    double sum = 0.0;
    for ( double c : rank_compute )
    {
        m.compute_max = std::max( m.compute_max, c );
        sum += c;
    }
    m.compute_avg = rank_compute.empty() ? 0.0 : sum / double( rank_compute.size() );

    const double per_face = cfg.comm_cost_per_face.value_or( 0.0 );
    std::int64_t max_faces = 0;
    if ( dm.n_ranks() > 1 && per_face > 0.0 )
        for ( auto f : off_rank_face_counts( ba, dm ) )
            max_faces = std::max( max_faces, f );
    m.comm_max = double( max_faces ) * per_face;

    if ( outcome.attempted )
        m.gather = cfg.gather_cost;

    if ( outcome.adopted )
    {
        std::int64_t moved = 0;
        for ( std::size_t b = 0; b < dm.size(); ++b )
            if ( dm[BoxId( b )] != prev_dm[BoxId( b )] )
                moved += state.per_box_particles[b] * cfg.particles_per_marker;
        m.redistribute =
            cfg.redistribute_latency + cfg.redistribute_cost_per_particle * double( moved );
    }

    m.compute_max *= overhead_factor;
    m.compute_avg *= overhead_factor;
    m.comm_max *= overhead_factor;
    m.gather *= overhead_factor;
    m.redistribute *= overhead_factor;
    m.walltime = m.compute_max + m.comm_max + m.gather + m.redistribute;

    for ( auto p : rank_particles( state, cfg, dm ) )
        m.max_rank_particles = std::max( m.max_rank_particles, p );
    m.oom = cfg.rank_capacity && m.max_rank_particles > *cfg.rank_capacity;
    return m;
}

//! Per-face cost making communication match the compute share of a step
//! on the compute-balanced mapping of the given state.
inline double calibrate_comm_cost( const WorkloadState& state, const ScenarioConfig& cfg,
                                   double knapsack_cap_factor = 1.5 )
{
    if ( cfg.n_ranks <= 1 )
        return 0.0;
    const auto work = true_work( state, cfg );
    const auto dm = knapsack_assign( work, cfg.n_ranks, knapsack_cap_factor );
    std::int64_t max_faces = 0;
    for ( auto f : off_rank_face_counts( state.boxes, dm ) )
        max_faces = std::max( max_faces, f );
    if ( max_faces == 0 )
        return 0.0;
    double total = 0.0;
    for ( double w : work )
        total += w;
    const double c_avg = total / double( cfg.n_ranks );
    return c_avg * ( 1.0 - cfg.compute_fraction ) / cfg.compute_fraction / double( max_faces );
}

//---------------------------------------------------------------------------//
// Driver
//---------------------------------------------------------------------------//

//! Which cost estimate the balancer sees.
struct CostSettings
{
    CostProvider provider = CostProvider::Heuristic;
    HeuristicWeights weights = HeuristicWeights::standard();
    MeasurementConfig measured = MeasurementConfig::gpu_clock();
    MeasurementConfig instrumented = MeasurementConfig::instrumented();

    double overhead_factor() const
    {
        switch ( provider )
        {
        case CostProvider::Heuristic:
            return 1.0;
        case CostProvider::Measured:
            return measured.overhead_factor;
        case CostProvider::Instrumented:
            return instrumented.overhead_factor;
        }
        return 1.0;
    }
};

struct MappingSnapshot
{
    std::int64_t step = 0;
    DistributionMapping mapping;
};

struct RunSummary
{
    double total_walltime = 0.0;
    double mean_efficiency = 0.0;
    std::int64_t adoption_count = 0;
    std::int64_t attempt_count = 0;
    double completion_fraction = 0.0;
    std::int64_t steps_executed = 0;
    bool oom = false;
    std::int64_t oom_step = -1;
    double total_gather = 0.0;
    double total_redistribute = 0.0;
    //! Resolved per-face communication cost.
    double comm_cost_per_face = 0.0;
};

struct RunResult
{
    std::vector<StepMetrics> steps;
    RunSummary summary;
    //! Costs the balancer saw, one vector per executed step.
    std::vector<CostVector> cost_trace;
    DistributionMapping initial_mapping;
    //! Mapping in effect after the decision of step 0 and of every adoption.
    std::vector<MappingSnapshot> mappings;
};

inline CostVector assess_costs( const WorkloadState& state, const ScenarioConfig& cfg,
                                const CostSettings& costs, std::int64_t step )
{
    switch ( costs.provider )
    {
    case CostProvider::Heuristic:
        return heuristic_cost( particles_per_box( state, cfg ), cells_per_box( state.boxes ),
                               costs.weights, step );
    case CostProvider::Measured:
        return measured_cost( true_work( state, cfg ), costs.measured, step );
    case CostProvider::Instrumented:
        return measured_cost( true_work( state, cfg ), costs.instrumented, step );
    }
    throw ConfigError( "unknown cost provider" );
}

/*!
  Run the time-stepping loop: advance the workload, assess costs, attempt a
  rebalance and charge the step's walltime. The run halts at the first step
  on which some rank exceeds its particle capacity.
*/
inline RunResult run_simulation( const ScenarioConfig& cfg_in, const BalancePolicy& policy,
                                 const CostSettings& costs_in )
{
    // Measurement noise streams are keyed by the scenario seed.
    CostSettings costs = costs_in;
    costs.measured.seed = cfg_in.seed;
    costs.instrumented.seed = cfg_in.seed;

    cfg_in.validate();
    policy.validate();
    costs.weights.validate();
    costs.measured.validate();
    costs.instrumented.validate();

    ScenarioConfig cfg = cfg_in;
    WorkloadState state = init_scenario( cfg );
    if ( !cfg.comm_cost_per_face )
        cfg.comm_cost_per_face = calibrate_comm_cost( state, cfg, policy.knapsack_cap_factor );

    const auto curve = morton_order( state.boxes );
    DistributionMapping dm = uniform_curve_mapping( curve, cfg.n_ranks );
    const double overhead = costs.overhead_factor();

    RunResult result;
    result.initial_mapping = dm;
    result.summary.comm_cost_per_face = *cfg.comm_cost_per_face;
    result.steps.reserve( std::size_t( cfg.total_steps ) );
    result.cost_trace.reserve( std::size_t( cfg.total_steps ) );

    double eff_sum = 0.0;
    for ( std::int64_t s = 0; s < cfg.total_steps; ++s )
    {
        state = advance( std::move( state ), cfg );
        CostVector assessed = assess_costs( state, cfg, costs, s );

        const BalanceOutcome outcome = attempt_rebalance( assessed, dm, policy, s, curve );
        const DistributionMapping& next = outcome.adopted ? outcome.proposed : dm;

        const auto work = true_work( state, cfg );
        const auto compute = rank_loads( work, next );
        StepMetrics m =
            step_walltime( compute, next, state.boxes, outcome, dm, state, cfg, overhead );
        m.step = s;

        auto& sum = result.summary;
        sum.total_walltime += m.walltime;
        sum.total_gather += m.gather;
        sum.total_redistribute += m.redistribute;
        sum.attempt_count += m.attempted ? 1 : 0;
        sum.adoption_count += m.adopted ? 1 : 0;
        eff_sum += m.eff_after;

        if ( outcome.adopted )
            dm = outcome.proposed;
        if ( s == 0 || outcome.adopted )
            result.mappings.push_back( { s, dm } );

        result.cost_trace.push_back( std::move( assessed ) );
        result.steps.push_back( m );

        if ( m.oom )
        {
            sum.oom = true;
            sum.oom_step = s;
            break;
        }
    }

    auto& sum = result.summary;
    sum.steps_executed = std::int64_t( result.steps.size() );
    sum.completion_fraction = double( sum.steps_executed ) / double( cfg.total_steps );
    sum.mean_efficiency = eff_sum / double( sum.steps_executed );
    return result;
}

} // namespace lbsim

#endif // LBSIM_WORKLOAD_HPP
