#ifndef LBSIM_COST_HPP
#define LBSIM_COST_HPP

#include <lbsim/decomposition.hpp>
#include <lbsim/error.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace lbsim
{

//! Per-box compute cost snapshot taken at one timestep.
struct CostVector
{
    std::vector<double> cost;
    std::int64_t step = 0;

    std::size_t size() const { return cost.size(); }
    double operator[]( std::size_t b ) const { return cost[b]; }
};

//! Weights of the particle-count and cell-count terms of the heuristic cost.
struct HeuristicWeights
{
    double particle = 0.75;
    double cell = 0.25;

    //! Calibrated default for knapsack runs.
    static constexpr HeuristicWeights standard() { return { 0.75, 0.25 }; }
    //! Cell-heavy weighting that works best with the curve partitioner.
    static constexpr HeuristicWeights sfc_tuned() { return { 0.02, 0.98 }; }

    void validate() const
    {
        detail::require( particle >= 0.0 && cell >= 0.0,
                         "heuristic weights must be nonnegative" );
        detail::require( particle > 0.0 || cell > 0.0,
                         "heuristic weights must not both be zero" );
    }
};

/*!
  Simulated on-device timer. The observed cost of a box is its true work
  times (1 + eps), eps uniform on [-noise_amplitude, noise_amplitude].
  overhead_factor inflates the modeled walltime of every step while the
  provider is active.
*/
struct MeasurementConfig
{
    double noise_amplitude = 0.05;
    double overhead_factor = 1.0;
    std::uint64_t seed = 0;

    //! In-kernel clock accumulation: low noise, no extra overhead.
    static constexpr MeasurementConfig gpu_clock( std::uint64_t seed = 0 )
    {
        return { 0.05, 1.0, seed };
    }
    //! Profiler activity records: same observations, twice the walltime.
    static constexpr MeasurementConfig instrumented( std::uint64_t seed = 0 )
    {
        return { 0.05, 2.0, seed };
    }

    void validate() const
    {
        detail::require( noise_amplitude >= 0.0 && noise_amplitude < 1.0,
                         "noise_amplitude must lie in [0, 1)" );
        detail::require( overhead_factor >= 1.0, "overhead_factor must be >= 1" );
    }
};

enum class CostProvider
{
    Heuristic,
    Measured,
    Instrumented,
};

inline std::string to_string( CostProvider p )
{
    switch ( p )
    {
    case CostProvider::Heuristic:
        return "heuristic";
    case CostProvider::Measured:
        return "measured";
    case CostProvider::Instrumented:
        return "instrumented";
    }
    return "unknown";
}

inline CostProvider parse_cost_provider( const std::string& s )
{
    if ( s == "heuristic" )
        return CostProvider::Heuristic;
    if ( s == "measured" )
        return CostProvider::Measured;
    if ( s == "instrumented" )
        return CostProvider::Instrumented;
    throw ConfigError( "cost: '" + s +
                       "' is not one of heuristic, measured, instrumented" );
}

//---------------------------------------------------------------------------//
inline CostVector heuristic_cost( std::span<const std::int64_t> particles_per_box,
                                  std::span<const std::int64_t> cells_per_box,
                                  const HeuristicWeights& w, std::int64_t step = 0 )
{
    w.validate();
    if ( particles_per_box.size() != cells_per_box.size() )
        throw ContractError( "heuristic_cost: particle and cell count vectors "
                             "differ in length (" +
                             std::to_string( particles_per_box.size() ) + " vs " +
                             std::to_string( cells_per_box.size() ) + ")" );
    CostVector out;
    out.step = step;
    out.cost.resize( particles_per_box.size() );
    for ( std::size_t b = 0; b < particles_per_box.size(); ++b )
    {
        if ( particles_per_box[b] < 0 || cells_per_box[b] < 0 )
            throw ContractError( "heuristic_cost: negative count at box " +
                                 std::to_string( b ) );
        out.cost[b] = w.particle * double( particles_per_box[b] ) +
                      w.cell * double( cells_per_box[b] );
    }
    return out;
}

namespace detail
{
// Counter-based stream keyed by (seed, step, box): one independent uniform
// variate per box without any shared generator state.
constexpr std::uint64_t mix64( std::uint64_t z )
{
    z += 0x9E3779B97F4A7C15ull;
    z = ( z ^ ( z >> 30 ) ) * 0xBF58476D1CE4E5B9ull;
    z = ( z ^ ( z >> 27 ) ) * 0x94D049BB133111EBull;
    return z ^ ( z >> 31 );
}

constexpr double keyed_uniform( std::uint64_t seed, std::int64_t step, std::int64_t box )
{
    std::uint64_t h = mix64( seed );
    h = mix64( h ^ static_cast<std::uint64_t>( step ) );
    h = mix64( h ^ static_cast<std::uint64_t>( box ) );
    // 53 random mantissa bits -> [0, 1)
    return double( h >> 11 ) * 0x1.0p-53;
}
} // namespace detail

inline CostVector measured_cost( std::span<const double> true_work,
                                 const MeasurementConfig& cfg, std::int64_t step = 0 )
{
    cfg.validate();
    CostVector out;
    out.step = step;
    out.cost.resize( true_work.size() );
    for ( std::size_t b = 0; b < true_work.size(); ++b )
    {
        if ( true_work[b] < 0.0 )
            throw ContractError( "measured_cost: negative work at box " +
                                 std::to_string( b ) );
        if ( cfg.noise_amplitude == 0.0 )
        {
            out.cost[b] = true_work[b];
            continue;
        }
        const double u = detail::keyed_uniform( cfg.seed, step, std::int64_t( b ) );
        const double eps = cfg.noise_amplitude * ( 2.0 * u - 1.0 );
        out.cost[b] = true_work[b] * ( 1.0 + eps );
    }
    return out;
}

//---------------------------------------------------------------------------//
// Root-process gather
//---------------------------------------------------------------------------//

//! Costs of the boxes owned by one rank.
struct CostBatch
{
    RankId rank = 0;
    std::vector<std::pair<BoxId, double>> entries;
};

//! Assemble per-rank partial costs into one vector indexed by box id.
inline CostVector gather_costs( std::span<const CostBatch> batches, std::size_t n_boxes,
                                std::int64_t step = 0 )
{
    CostVector out;
    out.step = step;
    out.cost.assign( n_boxes, 0.0 );
    std::vector<char> seen( n_boxes, 0 );
    for ( const auto& batch : batches )
        for ( const auto& [id, c] : batch.entries )
        {
            if ( id < 0 || std::size_t( id ) >= n_boxes )
                throw ContractError( "gather_costs: box id " + std::to_string( id ) +
                                     " out of range" );
            if ( seen[std::size_t( id )] )
                throw ContractError( "gather_costs: duplicate box " +
                                     std::to_string( id ) );
            seen[std::size_t( id )] = 1;
            out.cost[std::size_t( id )] = c;
        }
    for ( std::size_t b = 0; b < n_boxes; ++b )
        if ( !seen[b] )
            throw ContractError( "gather_costs: missing box " + std::to_string( b ) );
    return out;
}

//! Inverse of gather_costs: one batch per rank, boxes in ascending id order.
inline std::vector<CostBatch> split_by_owner( const CostVector& costs,
                                              const DistributionMapping& dm )
{
    if ( costs.size() != dm.size() )
        throw ContractError( "split_by_owner: cost vector and mapping differ in length" );
    std::vector<CostBatch> batches( std::size_t( dm.n_ranks() ) );
    for ( std::size_t r = 0; r < batches.size(); ++r )
        batches[r].rank = RankId( r );
    for ( std::size_t b = 0; b < costs.size(); ++b )
        batches[std::size_t( dm[BoxId( b )] )].entries.emplace_back( BoxId( b ),
                                                                     costs[b] );
    return batches;
}

} // namespace lbsim

#endif // LBSIM_COST_HPP
