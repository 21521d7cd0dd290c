#include <lbsim/cost.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace lbsim;

TEST( HeuristicCost, ParticleWeightOnly )
{
    const std::vector<std::int64_t> p{ 18, 0, 0, 12 }, c{ 4, 4, 4, 4 };
    EXPECT_EQ( heuristic_cost( p, c, { 1.0, 0.0 } ).cost,
               ( std::vector<double>{ 18, 0, 0, 12 } ) );
}

TEST( HeuristicCost, ParticleFree )
{
    const std::vector<std::int64_t> p{ 0, 0 }, c{ 4, 4 };
    EXPECT_EQ( heuristic_cost( p, c, HeuristicWeights::standard() ).cost,
               ( std::vector<double>{ 1, 1 } ) );
}

TEST( HeuristicCost, DefaultWeights )
{
    const std::vector<std::int64_t> p{ 100, 0 }, c{ 64 * 64, 64 * 64 };
    EXPECT_EQ( heuristic_cost( p, c, HeuristicWeights::standard() ).cost,
               ( std::vector<double>{ 1099, 1024 } ) );
}

TEST( HeuristicCost, Presets )
{
    EXPECT_EQ( HeuristicWeights::standard().particle, 0.75 );
    EXPECT_EQ( HeuristicWeights::standard().cell, 0.25 );
    EXPECT_EQ( HeuristicWeights::sfc_tuned().particle, 0.02 );
    EXPECT_EQ( HeuristicWeights::sfc_tuned().cell, 0.98 );
}

TEST( HeuristicCost, Errors )
{
    const std::vector<std::int64_t> a{ 1, 2 }, b{ 1 };
    EXPECT_THROW( heuristic_cost( a, b, {} ), ContractError );
    EXPECT_THROW( heuristic_cost( a, a, { 0.0, 0.0 } ), ConfigError );
    EXPECT_THROW( heuristic_cost( a, a, { -1.0, 1.0 } ), ConfigError );
}

TEST( HeuristicCost, Linear )
{
    std::mt19937 rng( 3 );
    std::uniform_int_distribution<std::int64_t> d( 0, 5000 );
    for ( int t = 0; t < 200; ++t )
    {
        std::vector<std::int64_t> p( 16 ), c( 16 );
        for ( std::size_t i = 0; i < p.size(); ++i )
        {
            p[i] = d( rng );
            c[i] = d( rng );
        }
        auto p2 = p, c2 = c;
        for ( auto& v : p2 )
            v *= 2;
        for ( auto& v : c2 )
            v *= 2;
        const auto once = heuristic_cost( p, c, {} );
        const auto twice = heuristic_cost( p2, c2, {} );
        for ( std::size_t i = 0; i < p.size(); ++i )
            ASSERT_EQ( twice[i], 2.0 * once[i] );
    }
}

TEST( MeasuredCost, ZeroNoiseIsIdentity )
{
    const std::vector<double> w{ 0.0, 1.5, 1e9, 3.25 };
    MeasurementConfig cfg{ 0.0, 1.0, 99 };
    EXPECT_EQ( measured_cost( w, cfg, 4 ).cost, w );
}

TEST( MeasuredCost, Bounded )
{
    const std::vector<double> w{ 10, 10 };
    for ( std::uint64_t seed = 0; seed < 200; ++seed )
    {
        MeasurementConfig cfg{ 0.1, 1.0, seed };
        for ( std::int64_t s = 0; s < 10; ++s )
            for ( double c : measured_cost( w, cfg, s ).cost )
            {
                ASSERT_GE( c, 9.0 );
                ASSERT_LE( c, 11.0 );
            }
    }
}

TEST( MeasuredCost, RelativeBoundAllSeeds )
{
    std::mt19937_64 rng( 5 );
    std::uniform_real_distribution<double> d( 0.0, 1e6 );
    for ( int t = 0; t < 500; ++t )
    {
        std::vector<double> w( 20 );
        for ( auto& v : w )
            v = d( rng );
        const double sigma = 0.3;
        const auto c = measured_cost( w, { sigma, 1.0, rng() }, std::int64_t( t ) );
        for ( std::size_t i = 0; i < w.size(); ++i )
            ASSERT_LE( std::abs( c[i] - w[i] ), sigma * w[i] * ( 1 + 1e-15 ) );
    }
}

TEST( MeasuredCost, DeterministicAndVaries )
{
    const std::vector<double> w( 50, 100.0 );
    const MeasurementConfig cfg{ 0.05, 1.0, 42 };
    EXPECT_EQ( measured_cost( w, cfg, 3 ).cost, measured_cost( w, cfg, 3 ).cost );
    EXPECT_NE( measured_cost( w, cfg, 3 ).cost, measured_cost( w, cfg, 4 ).cost );
    EXPECT_NE( measured_cost( w, cfg, 3 ).cost,
               measured_cost( w, { 0.05, 1.0, 43 }, 3 ).cost );
}

TEST( MeasuredCost, Validation )
{
    const std::vector<double> w{ 1.0 };
    EXPECT_THROW( measured_cost( w, { 1.0, 1.0, 0 } ), ConfigError );
    EXPECT_THROW( measured_cost( w, { 0.1, 0.5, 0 } ), ConfigError );
    EXPECT_EQ( MeasurementConfig::gpu_clock().overhead_factor, 1.0 );
    EXPECT_EQ( MeasurementConfig::instrumented().overhead_factor, 2.0 );
}

TEST( GatherCosts, Reassembly )
{
    const std::vector<CostBatch> batches{ { 0, { { 0, 5.0 }, { 3, 1.0 } } },
                                          { 1, { { 1, 3.0 }, { 2, 3.0 } } } };
    EXPECT_EQ( gather_costs( batches, 4 ).cost, ( std::vector<double>{ 5, 3, 3, 1 } ) );
}

TEST( GatherCosts, SingleOwner )
{
    const std::vector<CostBatch> batches{ { 0, { { 2, 7.0 }, { 0, 1.0 }, { 1, 4.0 } } } };
    EXPECT_EQ( gather_costs( batches, 3 ).cost, ( std::vector<double>{ 1, 4, 7 } ) );
}

TEST( GatherCosts, DuplicateAndMissing )
{
    const std::vector<CostBatch> dup{ { 0, { { 0, 1.0 }, { 2, 1.0 } } },
                                      { 1, { { 1, 1.0 }, { 2, 1.0 } } } };
    try
    {
        gather_costs( dup, 3 );
        FAIL();
    }
    catch ( const ContractError& e )
    {
        EXPECT_NE( std::string( e.what() ).find( "duplicate box 2" ), std::string::npos );
    }
    const std::vector<CostBatch> gap{ { 0, { { 0, 1.0 }, { 2, 1.0 } } } };
    try
    {
        gather_costs( gap, 3 );
        FAIL();
    }
    catch ( const ContractError& e )
    {
        EXPECT_NE( std::string( e.what() ).find( "missing box 1" ), std::string::npos );
    }
}

TEST( GatherCosts, SplitGatherIdempotent )
{
    std::mt19937 rng( 9 );
    for ( int t = 0; t < 200; ++t )
    {
        const int n_boxes = 1 + int( rng() % 40 ), n_ranks = 1 + int( rng() % 6 );
        CostVector cv;
        std::vector<RankId> owner;
        for ( int b = 0; b < n_boxes; ++b )
        {
            cv.cost.push_back( double( rng() % 1000 ) / 7.0 );
            owner.push_back( RankId( rng() % unsigned( n_ranks ) ) );
        }
        const DistributionMapping dm( owner, n_ranks );
        const auto once = gather_costs( split_by_owner( cv, dm ), cv.size() );
        const auto twice = gather_costs( split_by_owner( once, dm ), cv.size() );
        ASSERT_EQ( once.cost, cv.cost );
        ASSERT_EQ( twice.cost, once.cost );
    }
}

TEST( CostProvider, Parse )
{
    EXPECT_EQ( parse_cost_provider( "measured" ), CostProvider::Measured );
    EXPECT_EQ( to_string( CostProvider::Instrumented ), "instrumented" );
    EXPECT_THROW( parse_cost_provider( "cupti" ), ConfigError );
}
