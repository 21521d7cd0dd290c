#ifndef LBSIM_DECOMPOSITION_HPP
#define LBSIM_DECOMPOSITION_HPP

#include <lbsim/error.hpp>

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

namespace lbsim
{

using BoxId = std::int32_t;
using RankId = std::int32_t;

//! Cell (or box-grid) coordinate pair, z first.
struct CellIndex
{
    int z = 0;
    int x = 0;

    friend bool operator==( const CellIndex&, const CellIndex& ) = default;
};

//! Number of cells along each axis.
struct Extent
{
    int nz = 0;
    int nx = 0;

    friend bool operator==( const Extent&, const Extent& ) = default;
};

//! Rectilinear region of cells. Bounds are inclusive.
struct Box
{
    BoxId id = 0;
    CellIndex lo;
    CellIndex hi;

    int length_z() const { return hi.z - lo.z + 1; }
    int length_x() const { return hi.x - lo.x + 1; }
    std::int64_t num_cells() const
    {
        return std::int64_t( length_z() ) * length_x();
    }
    bool contains( CellIndex c ) const
    {
        return c.z >= lo.z && c.z <= hi.z && c.x >= lo.x && c.x <= hi.x;
    }
};

//---------------------------------------------------------------------------//
/*!
  Tiling of a 2D cell domain into square boxes of equal side length.

  Boxes are stored row-major over the box grid: id = bz * nbx + bx. Box ids
  never change for the lifetime of the array; rebalancing only changes
  ownership.
*/
class BoxArray
{
  public:
    BoxArray() = default;

    BoxArray( Extent domain, int box_size )
        : _domain( domain )
        , _box_size( box_size )
    {
        detail::require( box_size >= 1, "box_size must be >= 1" );
        detail::require( domain.nz >= 1 && domain.nx >= 1,
                         "domain extents must be >= 1" );
        if ( domain.nz % box_size != 0 )
            throw ConfigError( "box_size " + std::to_string( box_size ) +
                               " does not divide domain extent along z (" +
                               std::to_string( domain.nz ) + ")" );
        if ( domain.nx % box_size != 0 )
            throw ConfigError( "box_size " + std::to_string( box_size ) +
                               " does not divide domain extent along x (" +
                               std::to_string( domain.nx ) + ")" );

        _grid = { domain.nz / box_size, domain.nx / box_size };
        _boxes.reserve( std::size_t( _grid.nz ) * _grid.nx );
        for ( int bz = 0; bz < _grid.nz; ++bz )
            for ( int bx = 0; bx < _grid.nx; ++bx )
            {
                Box b;
                b.id = static_cast<BoxId>( _boxes.size() );
                b.lo = { bz * box_size, bx * box_size };
                b.hi = { b.lo.z + box_size - 1, b.lo.x + box_size - 1 };
                _boxes.push_back( b );
            }
    }

    Extent domain() const { return _domain; }
    int box_size() const { return _box_size; }
    //! Number of boxes along each axis.
    Extent grid() const { return _grid; }
    std::size_t size() const { return _boxes.size(); }
    const std::vector<Box>& boxes() const { return _boxes; }
    const Box& operator[]( BoxId id ) const { return _boxes[std::size_t( id )]; }

    CellIndex grid_coord( BoxId id ) const
    {
        return { id / _grid.nx, id % _grid.nx };
    }

    BoxId box_id( CellIndex grid_coord ) const
    {
        return grid_coord.z * _grid.nx + grid_coord.x;
    }

    //! Box containing the given cell. The cell must lie in the domain.
    BoxId box_of_cell( CellIndex cell ) const
    {
        return box_id( { cell.z / _box_size, cell.x / _box_size } );
    }

  private:
    Extent _domain;
    int _box_size = 0;
    Extent _grid;
    std::vector<Box> _boxes;
};

inline BoxArray build_box_array( Extent domain, int box_size )
{
    return BoxArray( domain, box_size );
}

//---------------------------------------------------------------------------//
//! Owning rank of every box.
class DistributionMapping
{
  public:
    DistributionMapping() = default;

    DistributionMapping( std::vector<RankId> owner, int n_ranks )
        : _owner( std::move( owner ) )
        , _n_ranks( n_ranks )
    {
        detail::require( n_ranks >= 1, "n_ranks must be >= 1" );
        for ( std::size_t b = 0; b < _owner.size(); ++b )
            if ( _owner[b] < 0 || _owner[b] >= n_ranks )
                throw ConfigError( "box " + std::to_string( b ) +
                                   " assigned to invalid rank " +
                                   std::to_string( _owner[b] ) );
    }

    int n_ranks() const { return _n_ranks; }
    std::size_t size() const { return _owner.size(); }
    RankId operator[]( BoxId b ) const { return _owner[std::size_t( b )]; }
    const std::vector<RankId>& owners() const { return _owner; }

    friend bool operator==( const DistributionMapping&,
                            const DistributionMapping& ) = default;

  private:
    std::vector<RankId> _owner;
    int _n_ranks = 1;
};

//---------------------------------------------------------------------------//
// Morton (Z-order) enumeration
//---------------------------------------------------------------------------//
namespace detail
{
// Spread the low 32 bits of v so that bit i lands at bit 2i.
constexpr std::uint64_t spread_bits( std::uint64_t v )
{
    v &= 0xFFFFFFFFull;
    v = ( v | ( v << 16 ) ) & 0x0000FFFF0000FFFFull;
    v = ( v | ( v << 8 ) ) & 0x00FF00FF00FF00FFull;
    v = ( v | ( v << 4 ) ) & 0x0F0F0F0F0F0F0F0Full;
    v = ( v | ( v << 2 ) ) & 0x3333333333333333ull;
    v = ( v | ( v << 1 ) ) & 0x5555555555555555ull;
    return v;
}
} // namespace detail

//! Interleave coordinate bits: first axis on even bits, second on odd bits.
constexpr std::uint64_t morton_index( std::uint32_t first, std::uint32_t second )
{
    return detail::spread_bits( first ) | ( detail::spread_bits( second ) << 1 );
}

constexpr std::uint64_t morton_index( CellIndex grid_coord )
{
    return morton_index( static_cast<std::uint32_t>( grid_coord.z ),
                         static_cast<std::uint32_t>( grid_coord.x ) );
}

/*!
  Box ids sorted by the Morton index of their box-grid coordinates.

  Grids whose sides are not powers of two are treated as embedded in the
  enclosing power-of-two grid; missing positions are simply absent from the
  sorted sequence.
*/
inline std::vector<BoxId> morton_order( const BoxArray& ba )
{
    std::vector<std::pair<std::uint64_t, BoxId>> keyed;
    keyed.reserve( ba.size() );
    for ( const auto& b : ba.boxes() )
        keyed.emplace_back( morton_index( ba.grid_coord( b.id ) ), b.id );
    std::sort( keyed.begin(), keyed.end() );

    std::vector<BoxId> order;
    order.reserve( keyed.size() );
    for ( const auto& [key, id] : keyed )
        order.push_back( id );
    return order;
}

inline std::vector<std::int64_t> rank_box_counts( const DistributionMapping& dm )
{
    std::vector<std::int64_t> counts( std::size_t( dm.n_ranks() ), 0 );
    for ( RankId r : dm.owners() )
        ++counts[std::size_t( r )];
    return counts;
}

/*!
  Per-rank number of box faces shared with a box owned by a different rank.
  Faces on the domain boundary are not counted.
*/
inline std::vector<std::int64_t> off_rank_face_counts( const BoxArray& ba,
                                                       const DistributionMapping& dm )
{
    std::vector<std::int64_t> faces( std::size_t( dm.n_ranks() ), 0 );
    const auto grid = ba.grid();
    for ( int bz = 0; bz < grid.nz; ++bz )
        for ( int bx = 0; bx < grid.nx; ++bx )
        {
            const BoxId id = ba.box_id( { bz, bx } );
            const RankId r = dm[id];
            // Each interior face is visited once from its lower neighbour.
            if ( bz + 1 < grid.nz )
            {
                const RankId s = dm[ba.box_id( { bz + 1, bx } )];
                if ( s != r )
                {
                    ++faces[std::size_t( r )];
                    ++faces[std::size_t( s )];
                }
            }
            if ( bx + 1 < grid.nx )
            {
                const RankId s = dm[ba.box_id( { bz, bx + 1 } )];
                if ( s != r )
                {
                    ++faces[std::size_t( r )];
                    ++faces[std::size_t( s )];
                }
            }
        }
    return faces;
}

} // namespace lbsim

#endif // LBSIM_DECOMPOSITION_HPP
