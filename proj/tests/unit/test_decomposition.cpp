#include <lbsim/decomposition.hpp>

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

using namespace lbsim;

TEST( BoxArray, FourByFourIntoFourBoxes )
{
    const auto ba = build_box_array( { 4, 4 }, 2 );
    ASSERT_EQ( ba.size(), 4u );
    for ( const auto& b : ba.boxes() )
    {
        EXPECT_EQ( b.length_z(), 2 );
        EXPECT_EQ( b.length_x(), 2 );
    }
    EXPECT_EQ( ba[1].lo, ( CellIndex{ 0, 2 } ) );
    EXPECT_EQ( ba[2].lo, ( CellIndex{ 2, 0 } ) );
}

TEST( BoxArray, SingleBoxCoversDomain )
{
    const auto ba = build_box_array( { 2, 2 }, 2 );
    ASSERT_EQ( ba.size(), 1u );
    EXPECT_EQ( ba[0].lo, ( CellIndex{ 0, 0 } ) );
    EXPECT_EQ( ba[0].hi, ( CellIndex{ 1, 1 } ) );
}

TEST( BoxArray, LargeDomainCount )
{
    EXPECT_EQ( build_box_array( { 1920, 1920 }, 64 ).size(), 900u );
    EXPECT_EQ( build_box_array( { 960, 960 }, 32 ).size(), 900u );
}

TEST( BoxArray, NonDivisibleNamesAxis )
{
    try
    {
        build_box_array( { 8, 10 }, 4 );
        FAIL() << "expected ConfigError";
    }
    catch ( const ConfigError& e )
    {
        EXPECT_NE( std::string( e.what() ).find( "along x" ), std::string::npos ) << e.what();
    }
    try
    {
        build_box_array( { 10, 8 }, 4 );
        FAIL() << "expected ConfigError";
    }
    catch ( const ConfigError& e )
    {
        EXPECT_NE( std::string( e.what() ).find( "along z" ), std::string::npos ) << e.what();
    }
    EXPECT_THROW( build_box_array( { 8, 8 }, 0 ), ConfigError );
}

TEST( BoxArray, TilingIsExact )
{
    for ( int m : { 1, 2, 3, 6 } )
    {
        const auto ba = build_box_array( { 12, 18 }, m );
        EXPECT_EQ( ba.size(), std::size_t( ( 12 / m ) * ( 18 / m ) ) );
        for ( int z = 0; z < 12; ++z )
            for ( int x = 0; x < 18; ++x )
            {
                int hits = 0;
                for ( const auto& b : ba.boxes() )
                    hits += b.contains( { z, x } ) ? 1 : 0;
                ASSERT_EQ( hits, 1 ) << "cell " << z << "," << x << " m=" << m;
                EXPECT_TRUE( ba[ba.box_of_cell( { z, x } )].contains( { z, x } ) );
            }
    }
}

TEST( BoxArray, RowMajorIds )
{
    const auto ba = build_box_array( { 6, 9 }, 3 );
    for ( const auto& b : ba.boxes() )
    {
        const auto g = ba.grid_coord( b.id );
        EXPECT_EQ( b.id, g.z * 3 + g.x );
        EXPECT_EQ( ba.box_id( g ), b.id );
    }
}

TEST( DistributionMapping, RejectsInvalidRank )
{
    EXPECT_THROW( DistributionMapping( { 0, 2 }, 2 ), ConfigError );
    EXPECT_THROW( DistributionMapping( { 0, -1 }, 2 ), ConfigError );
    EXPECT_THROW( DistributionMapping( { 0 }, 0 ), ConfigError );
}

TEST( Morton, Examples )
{
    EXPECT_EQ( morton_index( 0, 0 ), 0u );
    EXPECT_EQ( morton_index( 1, 0 ), 1u );
    EXPECT_EQ( morton_index( 0, 1 ), 2u );
    EXPECT_EQ( morton_index( 1, 1 ), 3u );
    EXPECT_EQ( morton_index( 3, 5 ), 39u );
}

TEST( Morton, MatchesBitLoopOracle )
{
    std::mt19937_64 rng( 7 );
    std::uniform_int_distribution<std::uint32_t> d( 0, 0xFFFFFFFFu );
    for ( int i = 0; i < 10000; ++i )
    {
        const auto a = d( rng ), b = d( rng );
        ASSERT_EQ( morton_index( a, b ), oracle::interleave( a, b ) );
    }
}

TEST( Morton, InjectiveUpTo16Bits )
{
    std::mt19937 rng( 11 );
    std::uniform_int_distribution<std::uint32_t> d( 0, 0xFFFF );
    std::set<std::pair<std::uint32_t, std::uint32_t>> coords;
    std::set<std::uint64_t> keys;
    while ( coords.size() < 50000 )
    {
        const auto a = d( rng ), b = d( rng );
        if ( coords.emplace( a, b ).second )
            keys.insert( morton_index( a, b ) );
    }
    EXPECT_EQ( keys.size(), coords.size() );
}

TEST( MortonOrder, TwoByTwo )
{
    const auto ba = build_box_array( { 2, 2 }, 1 );
    const auto ord = morton_order( ba );
    // (0,0), (1,0), (0,1), (1,1) with the first coordinate along z.
    const std::vector<BoxId> want{ ba.box_id( { 0, 0 } ), ba.box_id( { 1, 0 } ),
                                   ba.box_id( { 0, 1 } ), ba.box_id( { 1, 1 } ) };
    EXPECT_EQ( ord, want );
}

TEST( MortonOrder, SingleBox )
{
    EXPECT_EQ( morton_order( build_box_array( { 5, 5 }, 5 ) ), std::vector<BoxId>{ 0 } );
}

TEST( MortonOrder, QuadrantsContiguous )
{
    const auto ba = build_box_array( { 4, 4 }, 1 );
    const auto ord = morton_order( ba );
    for ( int q = 0; q < 4; ++q )
    {
        std::set<std::pair<int, int>> quadrant;
        for ( int k = 0; k < 4; ++k )
        {
            const auto g = ba.grid_coord( ord[std::size_t( 4 * q + k )] );
            quadrant.emplace( g.z / 2, g.x / 2 );
        }
        EXPECT_EQ( quadrant.size(), 1u ) << "quadrant " << q;
    }
}

TEST( MortonOrder, AlignedRunsAreSquares )
{
    for ( int k = 1; k <= 5; ++k )
    {
        const int side = 1 << k;
        const auto ba = build_box_array( { side, side }, 1 );
        auto ord = morton_order( ba );
        // Every run of 4^j positions starting at a multiple of 4^j is a
        // 2^j x 2^j square.
        for ( int j = 0; j <= k; ++j )
        {
            const std::size_t len = std::size_t( 1 ) << ( 2 * j );
            for ( std::size_t s = 0; s < ord.size(); s += len )
            {
                int z0 = side, z1 = -1, x0 = side, x1 = -1;
                for ( std::size_t i = s; i < s + len; ++i )
                {
                    const auto g = ba.grid_coord( ord[i] );
                    z0 = std::min( z0, g.z );
                    z1 = std::max( z1, g.z );
                    x0 = std::min( x0, g.x );
                    x1 = std::max( x1, g.x );
                }
                ASSERT_EQ( z1 - z0 + 1, 1 << j );
                ASSERT_EQ( x1 - x0 + 1, 1 << j );
            }
        }
        std::sort( ord.begin(), ord.end() );
        for ( std::size_t i = 0; i < ord.size(); ++i )
            ASSERT_EQ( ord[i], BoxId( i ) );
    }
}

TEST( MortonOrder, UnalignedRunsCanJump )
{
    // Positions 31 and 32 of an 8x8 curve sit on opposite edges along z.
    const auto ba = build_box_array( { 8, 8 }, 1 );
    const auto ord = morton_order( ba );
    EXPECT_EQ( ba.grid_coord( ord[31] ), ( CellIndex{ 7, 3 } ) );
    EXPECT_EQ( ba.grid_coord( ord[32] ), ( CellIndex{ 0, 4 } ) );
}

TEST( MortonOrder, NonPowerOfTwoSkipsMissing )
{
    const auto ba = build_box_array( { 3, 5 }, 1 );
    const auto ord = morton_order( ba );
    ASSERT_EQ( ord.size(), 15u );
    for ( std::size_t i = 1; i < ord.size(); ++i )
        EXPECT_LT( morton_index( ba.grid_coord( ord[i - 1] ) ),
                   morton_index( ba.grid_coord( ord[i] ) ) );
}

TEST( RankBoxCounts, Examples )
{
    EXPECT_EQ( rank_box_counts( DistributionMapping( { 0, 1, 1, 0 }, 2 ) ),
               ( std::vector<std::int64_t>{ 2, 2 } ) );
    EXPECT_EQ( rank_box_counts( DistributionMapping( { 0, 0, 0 }, 2 ) ),
               ( std::vector<std::int64_t>{ 3, 0 } ) );
}

TEST( RankBoxCounts, DiagonalOwnership )
{
    // Row-major 2x2: ids 0 and 3 are upper-left and lower-right.
    const auto ba = build_box_array( { 4, 4 }, 2 );
    const DistributionMapping dm( { 0, 1, 1, 0 }, 2 );
    EXPECT_EQ( dm[ba.box_id( { 0, 0 } )], 0 );
    EXPECT_EQ( dm[ba.box_id( { 1, 1 } )], 0 );
    EXPECT_EQ( dm[ba.box_id( { 0, 1 } )], 1 );
}

TEST( OffRankFaces, Counts )
{
    const auto ba = build_box_array( { 4, 4 }, 2 );
    EXPECT_EQ( off_rank_face_counts( ba, DistributionMapping( { 0, 1, 1, 0 }, 2 ) ),
               ( std::vector<std::int64_t>{ 4, 4 } ) );
    EXPECT_EQ( off_rank_face_counts( ba, DistributionMapping( { 0, 0, 1, 1 }, 2 ) ),
               ( std::vector<std::int64_t>{ 2, 2 } ) );
    EXPECT_EQ( off_rank_face_counts( ba, DistributionMapping( { 0, 0, 0, 0 }, 1 ) ),
               ( std::vector<std::int64_t>{ 0 } ) );
}
