// Reference implementations used only by the tests. They favor obviousness
// over speed and share no code with the library.
#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace oracle
{

//! Morton key by per-bit loop: bit i of `first` lands on bit 2i.
inline std::uint64_t interleave( std::uint32_t first, std::uint32_t second )
{
    std::uint64_t key = 0;
    for ( int i = 0; i < 32; ++i )
    {
        key |= std::uint64_t( ( first >> i ) & 1u ) << ( 2 * i );
        key |= std::uint64_t( ( second >> i ) & 1u ) << ( 2 * i + 1 );
    }
    return key;
}

inline std::vector<double> loads( const std::vector<double>& costs,
                                  const std::vector<int>& owner, int n_ranks )
{
    std::vector<double> l( std::size_t( n_ranks ), 0.0 );
    for ( std::size_t b = 0; b < costs.size(); ++b )
        l[std::size_t( owner[b] )] += costs[b];
    return l;
}

inline double efficiency_of( const std::vector<double>& l )
{
    const double mx = *std::max_element( l.begin(), l.end() );
    if ( mx == 0.0 )
        return 1.0;
    return std::accumulate( l.begin(), l.end(), 0.0 ) / double( l.size() ) / mx;
}

/*!
  Exact minimum over all assignments of the largest rank load. Depth-first
  search over boxes in descending cost order; a box only tries one empty
  rank (they are interchangeable) and branches that cannot beat the best
  found so far are cut. Equivalent to enumerating all n^B assignments.
*/
inline double optimal_max_load( const std::vector<double>& costs, int n_ranks )
{
    std::vector<double> c( costs );
    std::sort( c.begin(), c.end(), std::greater<>() );
    const double total = std::accumulate( c.begin(), c.end(), 0.0 );
    const double lower = std::max( c.empty() ? 0.0 : c.front(), total / n_ranks );
    double best = total;
    std::vector<double> l( std::size_t( n_ranks ), 0.0 );

    std::function<void( std::size_t, double )> go = [&]( std::size_t i, double cur_max ) {
        if ( cur_max >= best || best <= lower )
            return;
        if ( i == c.size() )
        {
            best = cur_max;
            return;
        }
        bool tried_empty = false;
        for ( auto& r : l )
        {
            if ( r == 0.0 )
            {
                if ( tried_empty )
                    continue;
                tried_empty = true;
            }
            r += c[i];
            go( i + 1, std::max( cur_max, r ) );
            r -= c[i];
        }
    };
    go( 0, 0.0 );
    return best;
}

/*!
  Minimum largest load over all ways of cutting the sequence into n_ranks
  consecutive (possibly empty) pieces, by enumerating every cut position
  tuple.
*/
inline double optimal_contiguous_max_load( const std::vector<double>& seq, int n_ranks )
{
    const int n = int( seq.size() );
    std::vector<double> prefix( std::size_t( n + 1 ), 0.0 );
    for ( int i = 0; i < n; ++i )
        prefix[std::size_t( i + 1 )] = prefix[std::size_t( i )] + seq[std::size_t( i )];

    double best = std::numeric_limits<double>::infinity();
    std::vector<int> cuts( std::size_t( n_ranks + 1 ), 0 );
    cuts.back() = n;
    std::function<void( int )> go = [&]( int k ) {
        if ( k == n_ranks )
        {
            double mx = 0.0;
            for ( int r = 0; r < n_ranks; ++r )
                mx = std::max( mx, prefix[std::size_t( cuts[std::size_t( r + 1 )] )] -
                                       prefix[std::size_t( cuts[std::size_t( r )] )] );
            best = std::min( best, mx );
            return;
        }
        for ( int p = cuts[std::size_t( k - 1 )]; p <= n; ++p )
        {
            cuts[std::size_t( k )] = p;
            go( k + 1 );
        }
    };
    if ( n_ranks == 1 )
        return prefix.back();
    go( 1 );
    return best;
}

} // namespace oracle
