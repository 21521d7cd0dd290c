#ifndef LBSIM_BALANCER_HPP
#define LBSIM_BALANCER_HPP

#include <lbsim/cost.hpp>
#include <lbsim/decomposition.hpp>
#include <lbsim/error.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace lbsim
{

//---------------------------------------------------------------------------//
// Load balance efficiency
//---------------------------------------------------------------------------//

//! Sum of owned box costs per rank, accumulated in box id order.
inline std::vector<double> rank_loads( std::span<const double> costs,
                                       const DistributionMapping& dm )
{
    if ( costs.size() != dm.size() )
        throw ContractError( "rank_loads: cost vector has " +
                             std::to_string( costs.size() ) + " entries, mapping has " +
                             std::to_string( dm.size() ) );
    std::vector<double> loads( std::size_t( dm.n_ranks() ), 0.0 );
    for ( std::size_t b = 0; b < costs.size(); ++b )
    {
        if ( !( costs[b] >= 0.0 ) )
            throw ContractError( "rank_loads: box " + std::to_string( b ) +
                                 " has negative or NaN cost" );
        loads[std::size_t( dm[BoxId( b )] )] += costs[b];
    }
    return loads;
}

struct EfficiencyResult
{
    double value = 1.0;
    //! True when every rank load is zero; value is then defined as 1.
    bool all_zero = false;
};

//! Mean rank load over maximum rank load.
inline EfficiencyResult efficiency_of_loads( std::span<const double> loads )
{
    double sum = 0.0;
    double max = 0.0;
    for ( double l : loads )
    {
        sum += l;
        max = std::max( max, l );
    }
    if ( max <= 0.0 )
        return { 1.0, true };
    const double avg = sum / double( loads.size() );
    return { std::min( 1.0, avg / max ), false };
}

inline EfficiencyResult efficiency_detail( std::span<const double> costs,
                                           const DistributionMapping& dm )
{
    const auto loads = rank_loads( costs, dm );
    return efficiency_of_loads( loads );
}

inline double efficiency( std::span<const double> costs, const DistributionMapping& dm )
{
    return efficiency_detail( costs, dm ).value;
}

inline double efficiency( const CostVector& costs, const DistributionMapping& dm )
{
    return efficiency( std::span<const double>( costs.cost ), dm );
}

//---------------------------------------------------------------------------//
// Knapsack: longest-processing-time greedy plus swap refinement
//---------------------------------------------------------------------------//

//! Largest box count a rank may hold under the knapsack cap.
inline std::int64_t knapsack_max_boxes( std::size_t n_boxes, int n_ranks, double cap_factor )
{
    return static_cast<std::int64_t>(
        std::ceil( cap_factor * double( n_boxes ) / double( n_ranks ) ) );
}

/*!
  Assign boxes to ranks minimizing the maximum rank load.

  Boxes are placed in descending cost order (ties: lower box id first) on the
  least-loaded rank that still has capacity (ties: lower rank id). The result
  is then refined: the most loaded rank repeatedly moves or swaps one box with
  another rank whenever that lowers the larger of the two loads, until no
  such move exists. No rank ever receives more than
  ceil(cap_factor * n_boxes / n_ranks) boxes.
*/
inline DistributionMapping knapsack_assign( std::span<const double> costs, int n_ranks,
                                            double cap_factor = 1.5 )
{
    detail::require( n_ranks >= 1, "knapsack_assign: n_ranks must be >= 1" );
    detail::require( cap_factor > 0.0, "knapsack_assign: cap_factor must be positive" );
    const std::size_t n = costs.size();
    const std::size_t R = std::size_t( n_ranks );
    const std::int64_t max_boxes = knapsack_max_boxes( n, n_ranks, cap_factor );
    if ( max_boxes * std::int64_t( R ) < std::int64_t( n ) )
        throw ConfigError( "knapsack_assign: cap factor " + std::to_string( cap_factor ) +
                           " allows only " + std::to_string( max_boxes ) +
                           " boxes per rank, too few to place " + std::to_string( n ) +
                           " boxes on " + std::to_string( n_ranks ) + " ranks" );

    std::vector<BoxId> order( n );
    for ( std::size_t b = 0; b < n; ++b )
        order[b] = BoxId( b );
    std::stable_sort( order.begin(), order.end(), [&]( BoxId a, BoxId b ) {
        return costs[std::size_t( a )] > costs[std::size_t( b )];
    } );

    std::vector<RankId> owner( n, 0 );
    std::vector<double> load( R, 0.0 );
    std::vector<std::int64_t> count( R, 0 );
    for ( BoxId b : order )
    {
        std::size_t best = R;
        for ( std::size_t r = 0; r < R; ++r )
        {
            if ( count[r] >= max_boxes )
                continue;
            if ( best == R || load[r] < load[best] )
                best = r;
        }
        owner[std::size_t( b )] = RankId( best );
        load[best] += costs[std::size_t( b )];
        ++count[best];
    }

    // Refinement. Per-rank boxes kept sorted by (cost, id) so the best swap
    // partner for a given box is found by binary search.
    using Entry = std::pair<double, BoxId>;
    std::vector<std::set<Entry>> held( R );
    for ( std::size_t b = 0; b < n; ++b )
        held[std::size_t( owner[b] )].emplace( costs[b], BoxId( b ) );

    const std::size_t max_iterations = 10 * n + 100;
    for ( std::size_t it = 0; it < max_iterations; ++it )
    {
        const std::size_t m = std::size_t(
            std::distance( load.begin(), std::max_element( load.begin(), load.end() ) ) );
        const double lm = load[m];
        const double tol = 1e-12 * lm;

        // (new pair max, box from m, partner rank, partner box or -1 for a move)
        std::tuple<double, BoxId, std::size_t, BoxId> best{
            std::numeric_limits<double>::infinity(), 0, 0, 0 };
        bool found = false;
        auto consider = [&]( double val, BoxId a, std::size_t r, BoxId b ) {
            const auto cand = std::make_tuple( val, a, r, b );
            if ( !found || cand < best )
            {
                best = cand;
                found = true;
            }
        };

        for ( const auto& [ca, a] : held[m] )
        {
            for ( std::size_t r = 0; r < R; ++r )
            {
                if ( r == m )
                    continue;
                const double lr = load[r];
                if ( count[r] < max_boxes )
                    consider( std::max( lm - ca, lr + ca ), a, r, -1 );

                const auto& other = held[r];
                if ( other.empty() )
                    continue;
                // Ideal partner cost leaves both loads equal.
                const double ideal = ca - 0.5 * ( lm - lr );
                auto it_hi = other.lower_bound(
                    { ideal, std::numeric_limits<BoxId>::min() } );
                auto try_swap = [&]( std::set<Entry>::const_iterator p ) {
                    const double cb = p->first;
                    if ( cb >= ca )
                        return;
                    consider( std::max( lm - ca + cb, lr + ca - cb ), a, r, p->second );
                };
                if ( it_hi != other.end() )
                    try_swap( it_hi );
                if ( it_hi != other.begin() )
                {
                    // First entry carrying the next lower cost value.
                    const double cb = std::prev( it_hi )->first;
                    try_swap( other.lower_bound( { cb, std::numeric_limits<BoxId>::min() } ) );
                }
            }
        }

        if ( !found || std::get<0>( best ) >= lm - tol )
            break;

        const auto [val, a, r, b] = best;
        const double ca = costs[std::size_t( a )];
        held[m].erase( { ca, a } );
        held[r].emplace( ca, a );
        owner[std::size_t( a )] = RankId( r );
        load[m] -= ca;
        load[r] += ca;
        if ( b >= 0 )
        {
            const double cb = costs[std::size_t( b )];
            held[r].erase( { cb, b } );
            held[m].emplace( cb, b );
            owner[std::size_t( b )] = RankId( m );
            load[r] -= cb;
            load[m] += cb;
        }
        else
        {
            --count[m];
            ++count[r];
        }
    }

    return DistributionMapping( std::move( owner ), n_ranks );
}

//---------------------------------------------------------------------------//
// Space-filling curve partitioning
//---------------------------------------------------------------------------//
namespace detail
{
inline void check_curve( std::span<const double> costs, std::span<const BoxId> curve )
{
    if ( costs.empty() )
        throw ContractError( "sfc_assign: empty cost vector" );
    if ( curve.size() != costs.size() )
        throw ContractError( "sfc_assign: curve length differs from cost vector length" );
    std::vector<char> seen( costs.size(), 0 );
    for ( BoxId b : curve )
    {
        if ( b < 0 || std::size_t( b ) >= costs.size() || seen[std::size_t( b )] )
            throw ContractError( "sfc_assign: curve is not a permutation of box ids" );
        seen[std::size_t( b )] = 1;
    }
}
} // namespace detail

/*!
  Split the curve into n_ranks contiguous segments, rank r owning segment r.

  Each segment grows box by box and closes as soon as adding the next box
  would move its sum further from total/n_ranks than stopping, or when the
  remaining boxes are just enough to give every remaining rank one box.
*/
inline DistributionMapping sfc_assign( std::span<const double> costs,
                                       std::span<const BoxId> curve, int n_ranks )
{
    detail::require( n_ranks >= 1, "sfc_assign: n_ranks must be >= 1" );
    detail::check_curve( costs, curve );

    const std::size_t n = curve.size();
    double total = 0.0;
    for ( BoxId b : curve )
        total += costs[std::size_t( b )];
    const double target = total / double( n_ranks );

    std::vector<RankId> owner( n, 0 );
    int r = 0;
    double seg_sum = 0.0;
    std::size_t seg_count = 0;
    for ( std::size_t i = 0; i < n; ++i )
    {
        const double c = costs[std::size_t( curve[i] )];
        if ( r < n_ranks - 1 && seg_count > 0 )
        {
            const std::size_t ranks_after = std::size_t( n_ranks - r - 1 );
            const bool must_close = ( n - i ) <= ranks_after;
            const bool overshoot =
                std::abs( seg_sum + c - target ) > std::abs( seg_sum - target );
            if ( must_close || overshoot )
            {
                ++r;
                seg_sum = 0.0;
                seg_count = 0;
            }
        }
        owner[std::size_t( curve[i] )] = r;
        seg_sum += c;
        ++seg_count;
    }
    return DistributionMapping( std::move( owner ), n_ranks );
}

/*!
  Optimal contiguous split (chains-on-chains) minimizing the largest segment
  sum, by dynamic programming over prefix sums. O(n_ranks * n^2).
*/
inline DistributionMapping sfc_assign_exact( std::span<const double> costs,
                                             std::span<const BoxId> curve, int n_ranks )
{
    detail::require( n_ranks >= 1, "sfc_assign_exact: n_ranks must be >= 1" );
    detail::check_curve( costs, curve );

    const std::size_t n = curve.size();
    const std::size_t parts = std::min<std::size_t>( std::size_t( n_ranks ), n );
    std::vector<double> prefix( n + 1, 0.0 );
    for ( std::size_t i = 0; i < n; ++i )
        prefix[i + 1] = prefix[i] + costs[std::size_t( curve[i] )];

    const double inf = std::numeric_limits<double>::infinity();
    // best[k][i]: minimal max segment sum covering the first i boxes with k
    // nonempty segments; cut[k][i]: start of the last segment.
    std::vector<std::vector<double>> best( parts + 1, std::vector<double>( n + 1, inf ) );
    std::vector<std::vector<std::size_t>> cut( parts + 1,
                                               std::vector<std::size_t>( n + 1, 0 ) );
    best[0][0] = 0.0;
    for ( std::size_t k = 1; k <= parts; ++k )
        for ( std::size_t i = k; i <= n - ( parts - k ); ++i )
            for ( std::size_t j = k - 1; j < i; ++j )
            {
                if ( best[k - 1][j] == inf )
                    continue;
                const double v = std::max( best[k - 1][j], prefix[i] - prefix[j] );
                if ( v < best[k][i] )
                {
                    best[k][i] = v;
                    cut[k][i] = j;
                }
            }

    std::vector<RankId> owner( n, 0 );
    std::size_t end = n;
    for ( std::size_t k = parts; k >= 1; --k )
    {
        const std::size_t start = cut[k][end];
        for ( std::size_t i = start; i < end; ++i )
            owner[std::size_t( curve[i] )] = RankId( k - 1 );
        end = start;
    }
    return DistributionMapping( std::move( owner ), n_ranks );
}

//! Equal box counts per rank along the curve; the cost-agnostic start state.
inline DistributionMapping uniform_curve_mapping( std::span<const BoxId> curve, int n_ranks )
{
    detail::require( n_ranks >= 1, "n_ranks must be >= 1" );
    const std::size_t n = curve.size();
    std::vector<RankId> owner( n, 0 );
    for ( std::size_t k = 0; k < n; ++k )
        owner[std::size_t( curve[k] )] =
            RankId( ( k * std::size_t( n_ranks ) ) / std::max<std::size_t>( n, 1 ) );
    return DistributionMapping( std::move( owner ), n_ranks );
}

//---------------------------------------------------------------------------//
// Gated rebalancing
//---------------------------------------------------------------------------//
enum class Strategy
{
    Knapsack,
    SpaceFillingCurve,
    //! Optimal contiguous split; exists mainly to validate the greedy split.
    SpaceFillingCurveExact,
};

enum class ThresholdMode
{
    //! Adopt when E_proposed >= E_current * (1 + threshold).
    Relative,
    //! Adopt when E_proposed >= E_current + threshold.
    Absolute,
};

inline std::string to_string( Strategy s )
{
    switch ( s )
    {
    case Strategy::Knapsack:
        return "knapsack";
    case Strategy::SpaceFillingCurve:
        return "sfc";
    case Strategy::SpaceFillingCurveExact:
        return "sfc-exact";
    }
    return "unknown";
}

inline Strategy parse_strategy( const std::string& s )
{
    if ( s == "knapsack" )
        return Strategy::Knapsack;
    if ( s == "sfc" )
        return Strategy::SpaceFillingCurve;
    if ( s == "sfc-exact" )
        return Strategy::SpaceFillingCurveExact;
    throw ConfigError( "strategy: '" + s + "' is not one of knapsack, sfc, sfc-exact" );
}

/*!
  When and how to look for a better mapping.

  Periodic attempts happen at every step divisible by interval (step 0
  included). A static policy has no interval and a single forced attempt;
  a policy with neither never rebalances.
*/
struct BalancePolicy
{
    Strategy strategy = Strategy::Knapsack;
    std::optional<std::int64_t> interval = 10;
    std::optional<std::int64_t> forced_step;
    double improvement_threshold = 0.10;
    ThresholdMode threshold_mode = ThresholdMode::Relative;
    double knapsack_cap_factor = 1.5;

    static BalancePolicy none()
    {
        BalancePolicy p;
        p.interval.reset();
        return p;
    }

    static BalancePolicy static_at( std::int64_t step = 0,
                                    Strategy strategy = Strategy::Knapsack )
    {
        BalancePolicy p;
        p.strategy = strategy;
        p.interval.reset();
        p.forced_step = step;
        return p;
    }

    static BalancePolicy dynamic( Strategy strategy = Strategy::Knapsack,
                                  std::int64_t interval = 10, double threshold = 0.10 )
    {
        BalancePolicy p;
        p.strategy = strategy;
        p.interval = interval;
        p.improvement_threshold = threshold;
        return p;
    }

    bool enabled() const { return interval.has_value() || forced_step.has_value(); }

    bool is_attempt_step( std::int64_t step ) const
    {
        if ( forced_step && step == *forced_step )
            return true;
        return interval && step % *interval == 0;
    }

    bool accepts( double e_current, double e_proposed ) const
    {
        if ( e_proposed < e_current )
            return false;
        if ( threshold_mode == ThresholdMode::Relative )
            return e_proposed >= e_current * ( 1.0 + improvement_threshold );
        return e_proposed >= e_current + improvement_threshold;
    }

    void validate() const
    {
        detail::require( !interval || *interval >= 1, "interval must be >= 1" );
        detail::require( !forced_step || *forced_step >= 0, "static step must be >= 0" );
        detail::require( improvement_threshold >= 0.0,
                         "improvement threshold must be >= 0" );
        detail::require( knapsack_cap_factor >= 1.0, "knapsack cap factor must be >= 1" );
    }

    std::string describe() const
    {
        std::ostringstream os;
        if ( !enabled() )
            return "none";
        if ( interval )
            os << "dynamic " << to_string( strategy ) << " every " << *interval;
        else
            os << "static " << to_string( strategy ) << " at step " << *forced_step;
        os << ", threshold " << improvement_threshold
           << ( threshold_mode == ThresholdMode::Relative ? " (relative)" : " (absolute)" );
        if ( strategy == Strategy::Knapsack )
            os << ", cap " << knapsack_cap_factor;
        return os.str();
    }
};

struct BalanceOutcome
{
    DistributionMapping proposed;
    double efficiency_current = 1.0;
    double efficiency_proposed = 1.0;
    bool adopted = false;
    //! False on steps skipped by the interval gate.
    bool attempted = false;
};

inline DistributionMapping propose_mapping( std::span<const double> costs, int n_ranks,
                                            const BalancePolicy& policy,
                                            std::span<const BoxId> curve )
{
    std::vector<BoxId> identity;
    if ( policy.strategy != Strategy::Knapsack && curve.empty() )
    {
        identity.resize( costs.size() );
        for ( std::size_t b = 0; b < identity.size(); ++b )
            identity[b] = BoxId( b );
        curve = identity;
    }
    switch ( policy.strategy )
    {
    case Strategy::Knapsack:
        return knapsack_assign( costs, n_ranks, policy.knapsack_cap_factor );
    case Strategy::SpaceFillingCurve:
        return sfc_assign( costs, curve, n_ranks );
    case Strategy::SpaceFillingCurveExact:
        return sfc_assign_exact( costs, curve, n_ranks );
    }
    throw ConfigError( "unknown strategy" );
}

/*!
  One pass of the rebalancing routine. On a gated step a new mapping is
  proposed from the gathered costs and adopted only if it improves the
  efficiency by the policy threshold. curve is the box enumeration used by
  the space-filling-curve strategies (box id order when empty).
*/
inline BalanceOutcome attempt_rebalance( const CostVector& costs,
                                         const DistributionMapping& current,
                                         const BalancePolicy& policy, std::int64_t step,
                                         std::span<const BoxId> curve = {} )
{
    detail::require( step >= 0, "attempt_rebalance: step must be >= 0" );
    BalanceOutcome out;
    out.efficiency_current = efficiency( costs, current );
    if ( !policy.is_attempt_step( step ) )
    {
        out.proposed = current;
        out.efficiency_proposed = out.efficiency_current;
        return out;
    }
    out.attempted = true;
    out.proposed = propose_mapping( costs.cost, current.n_ranks(), policy, curve );
    out.efficiency_proposed = efficiency( costs, out.proposed );
    out.adopted = policy.accepts( out.efficiency_current, out.efficiency_proposed );
    return out;
}

} // namespace lbsim

#endif // LBSIM_BALANCER_HPP
