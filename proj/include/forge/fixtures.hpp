#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "forge/gateway.hpp"

namespace forge {

struct FixturePage {
    std::string url;
    std::string title;
    std::string html;
};

struct FixtureEntity {
    std::string name;
    std::string url;
    std::string descriptor;  // vague replacement used by entity fuzzing
    std::map<std::string, std::string> attributes;
};

/// Closed-world web corpus backing the deterministic fakes: pages by URL,
/// scripted engine results for known queries, a blocked-URL set modeling
/// crawl failures, and an entity directory for the synthesis pipeline.
struct FixtureCorpus {
    std::vector<FixturePage> pages;
    std::map<std::string, std::vector<EngineResult>> query_table;
    std::set<std::string> blocked_urls;
    std::vector<FixtureEntity> entities;

    const FixturePage* page(std::string_view url) const {
        for (const auto& p : pages)
            if (p.url == url) return &p;
        return nullptr;
    }
    const FixtureEntity* entity(std::string_view name) const {
        for (const auto& e : entities)
            if (e.name == name) return &e;
        return nullptr;
    }
    std::vector<std::string> entity_names() const {
        std::vector<std::string> names;
        names.reserve(entities.size());
        for (const auto& e : entities) names.push_back(e.name);
        return names;
    }
};

/// Built-in corpus centered on the Bill Dailey research scenario, plus a few
/// unrelated pages so entity trees and fuzzing have material to work with.
inline FixtureCorpus demo_corpus() {
    FixtureCorpus c;

    c.pages.push_back({
        "https://en.wikipedia.org/wiki/Arlington_County,_Virginia",
        "Arlington County, Virginia",
        R"HTML(<html><head><title>Arlington County, Virginia</title>
<script>var tracker = "should never leak into text";</script>
<style>.infobox { border: 1px solid; }</style></head>
<body><nav>Home | Random | Donate</nav>
<p>Arlington County is a county in the Commonwealth of Virginia, located directly across the Potomac River from Washington.
The land was originally part of the territory ceded by Virginia to form the District of Columbia in 1801.</p>
<p>Congress retroceded the area to Virginia in 1846, and the transfer took effect in 1847 after a local referendum.
For decades afterward the jurisdiction was known as Alexandria County, which caused persistent confusion with the independent City of Alexandria.</p>
<p>In 1920 the Virginia General Assembly renamed the county to Arlington County, taking the name from Arlington House, the estate overlooking the river.
The renaming resolved decades of misdelivered mail and ambiguous legal records.</p>
<p>Arlington has no incorporated towns within its borders and is among the smallest self-governing counties in the United States by land area.
Its neighborhoods grew rapidly once bridges and electric railways connected them to the capital.</p>
<footer>Retrieved from the encyclopedia archive.</footer></body></html>)HTML"});

    c.pages.push_back({
        "https://en.wikipedia.org/wiki/Alexandria,_Virginia",
        "Alexandria, Virginia",
        R"HTML(<html><head><title>Alexandria, Virginia</title></head>
<body><nav>Main page | Contents</nav>
<p>Alexandria is an independent city in northern Virginia on the west bank of the Potomac River.
Founded as a colonial port, it became part of the District of Columbia when the federal district was laid out.</p>
<p>On July 9, 1846, Congress voted to return the portion of the District south of the Potomac to Virginia.
The returned territory was organized as Alexandria County.</p>
<p>The City of Alexandria was rechartered in 1852 and became fully independent of the surrounding county in 1870.
The remaining rural portion of Alexandria County was renamed Arlington County in 1920 to end the confusion between the two Alexandrias.</p>
<p>Today the city is known for its preserved Old Town district and its waterfront parks.</p>
</body></html>)HTML"});

    c.pages.push_back({
        "https://arlhist.org/1920s-arlington-in-a-dozen-objects/",
        "1920s Arlington in a Dozen Objects",
        R"HTML(<html><head><title>1920s Arlington in a Dozen Objects</title></head>
<body><header>Local History Society</header>
<p>In March 1920 the county formerly called Alexandria County officially took the name Arlington County.
The old name dated to 1846, when Congress retroceded the land to Virginia, and it had long been confused with the neighboring city of Alexandria.</p>
<p>County officials argued that a distinct name would clarify addresses, deeds, and school records.
Our exhibition tells the story of that decade through a dozen everyday objects, from streetcar tokens to dairy bottles.</p>
<p>The renaming petition cited misrouted mail as the single most common complaint of county residents.</p>
</body></html>)HTML"});

    c.pages.push_back({
        "https://en.wikipedia.org/wiki/List_of_people_from_Virginia",
        "List of people from Virginia",
        R"HTML(<html><head><title>List of people from Virginia</title></head>
<body><p>This list collects notable people born in or strongly associated with the Commonwealth of Virginia.</p>
<p>Billy Wagner, born in 1971 in Marion, is a retired relief pitcher who starred for the Houston Astros and the New York Mets after pitching for Ferrum College.</p>
<p>Other ballplayers from the state include infielders, catchers, and pitchers spanning every era of the professional game.
The list is organized by field of endeavor and then alphabetically.</p>
<p>Entries for athletes note the town or county of birth where records allow.</p>
</body></html>)HTML"});

    c.pages.push_back({
        "https://en.wikipedia.org/wiki/Roy_Face",
        "Roy Face",
        R"HTML(<html><head><title>Roy Face</title></head>
<body><p>Elroy Leon Face, born February 20, 1928, in Stephentown, New York, was a pioneering relief specialist for the Pittsburgh Pirates.</p>
<p>Face was the first major leaguer to save twenty games more than once and led his league in saves three times.
In 1959 he won eighteen games in relief against a single loss, setting a record for single-season winning percentage.</p>
<p>He held the National League career saves record with 193 until 1982.
His forkball made him one of the most feared late-inning pitchers of the 1950s.</p>
</body></html>)HTML"});

    c.pages.push_back({
        "https://en.wikipedia.org/wiki/Sean_Doolittle",
        "Sean Doolittle",
        R"HTML(<html><head><title>Sean Doolittle</title></head>
<body><p>Sean Robert Doolittle, born September 26, 1986, is a former professional relief pitcher raised in Virginia.</p>
<p>He pitched for the University of Virginia, where he set the program record for career wins, and was named conference player of the year in 2006.
In the majors he appeared for Oakland, Washington, Cincinnati, and Seattle.</p>
<p>Doolittle was twice selected to the All-Star Game and closed out the 2019 World Series opener for Washington.</p>
</body></html>)HTML"});

    c.pages.push_back({
        "https://en.wikipedia.org/wiki/Bill_Dailey",
        "Bill Dailey",
        R"HTML(<html><head><title>Bill Dailey</title>
<script>loadInfobox();</script></head>
<body><nav>Main page | Sports portal</nav>
<p>Bill Dailey | Pitcher | Born: May 13, 1935, Arlington County, Virginia, U.S. | Died: January 11, 2025, Bedford, Virginia, U.S. | Batted: Right | Threw: Right |
MLB debut: August 17, 1961, for the Cleveland Indians | Last MLB appearance: June 9, 1964, for the Minnesota Twins |
Win-loss record: 10-7 | Earned run average: 2.76 | Strikeouts: 109 | Saves: 22</p>
<p>William Garland Dailey (May 13, 1935 - January 11, 2025) was an American Major League Baseball relief pitcher who appeared in parts of four seasons.
The right-hander stood six feet three inches tall and was born in Arlington County, Virginia.</p>
<p>Dailey spent almost nine full years in minor league baseball before the Cleveland Indians recalled him in August 1961.
In his one full season, 1963 with the Minnesota Twins, he pitched in 66 games, posted a 1.99 earned run average, and his 21 saves ranked third in the American League.</p>
<p>A rotator cuff injury in 1964 ended his career, and he retired after that season.
In 119 career games, all in relief, Dailey recorded a 10-7 record, 22 saves, and a 2.76 earned run average.</p>
<p>Dailey died in Bedford, Virginia, on January 11, 2025, at the age of 89.</p>
</body></html>)HTML"});

    c.pages.push_back({
        "https://en.wikipedia.org/wiki/Hoyt_Wilhelm",
        "Hoyt Wilhelm",
        R"HTML(<html><head><title>Hoyt Wilhelm</title></head>
<body><p>Hoyt Wilhelm, born July 26, 1922, in Huntersville, North Carolina, was a knuckleball pitcher who reached the Hall of Fame as a reliever.</p>
<p>Wilhelm pitched for nine clubs across twenty-one seasons and recorded more than two hundred saves before saves became an official statistic.
He led his league in earned run average in both the National and American Leagues.</p>
</body></html>)HTML"});

    c.pages.push_back({
        "https://en.wikipedia.org/wiki/Cleveland_Indians",
        "Cleveland Indians",
        R"HTML(<html><head><title>Cleveland Indians</title></head>
<body><p>The Cleveland Indians were a Major League Baseball franchise based in Cleveland, Ohio, playing in the American League.</p>
<p>The club won the World Series in 1920 and 1948 and fielded pennant winners built on strong pitching staffs.
Many relief pitchers, including Bill Dailey, made their debut with the club during the post-war decades.</p>
<p>The franchise adopted a new name in 2021, continuing the same American League lineage.</p>
</body></html>)HTML"});

    c.pages.push_back({
        "https://en.wikipedia.org/wiki/Minnesota_Twins",
        "Minnesota Twins",
        R"HTML(<html><head><title>Minnesota Twins</title></head>
<body><p>The Minnesota Twins are an American League club that moved from Washington to the Twin Cities in 1961.</p>
<p>The 1963 bullpen featured Bill Dailey, whose 21 saves that year ranked third in the American League.
The franchise won the World Series in 1987 and 1991 behind home-grown pitching.</p>
</body></html>)HTML"});

    c.pages.push_back({
        "https://en.wikipedia.org/wiki/District_of_Columbia_retrocession",
        "District of Columbia retrocession",
        R"HTML(<html><head><title>District of Columbia retrocession</title></head>
<body><p>Retrocession is the return of territory that had been ceded to form the federal district.
The Virginia portion of the District of Columbia was returned by Act of Congress in 1846 following a referendum of its residents.</p>
<p>The returned land operated as Alexandria County until 1920, when it was renamed Arlington County.
Proposals to retrocede the remaining district to Maryland resurface periodically.</p>
</body></html>)HTML"});

    c.pages.push_back({
        "https://en.wikipedia.org/wiki/History_of_Virginia",
        "History of Virginia",
        R"HTML(<html><head><title>History of Virginia</title></head>
<body><p>Virginia's recorded history spans the colonial settlement at Jamestown, the Revolutionary and Civil Wars, and the growth of its modern suburbs.</p>
<p>The Commonwealth ceded land for the national capital in 1790 and received part of it back in 1846.
County boundaries and names shifted repeatedly through the nineteenth and early twentieth centuries, including a notable renaming in 1920.</p>
</body></html>)HTML"});

    c.pages.push_back({
        "https://en.wikipedia.org/wiki/Albert_Einstein",
        "Albert Einstein",
        R"HTML(<html><head><title>Albert Einstein</title></head>
<body><p>Albert Einstein published four groundbreaking papers in 1905 while working at the patent office in Bern.</p>
<p>Albert Einstein developed the general theory of relativity and received the Nobel Prize in Physics in 1921.
He emigrated in 1933 and spent his later career at Princeton.</p>
</body></html>)HTML"});

    c.pages.push_back({
        "https://en.wikipedia.org/wiki/Bern",
        "Bern",
        R"HTML(<html><head><title>Bern</title></head>
<body><p>Bern is the de facto capital of Switzerland, built around a bend of the Aare river.</p>
<p>Its old town, founded in 1191, is a UNESCO World Heritage Site. The federal patent office where Albert Einstein worked stands near the main station.</p>
</body></html>)HTML"});

    // Scripted engine results for the research-session queries. First URL of
    // each row is the page the session is expected to surface first.
    c.query_table["Virginia county returned to Virginia in 1846 renamed in 1920"] = {
        {"Congress retroceded the area to Virginia in 1846 and the county known as Alexandria County was renamed Arlington County in 1920",
         "Arlington County, Virginia", "https://en.wikipedia.org/wiki/Arlington_County,_Virginia"},
        {"On July 9, 1846, Congress voted to return the portion south of the Potomac and the county was renamed Arlington County in 1920",
         "Alexandria, Virginia", "https://en.wikipedia.org/wiki/Alexandria,_Virginia"},
        {"In March 1920 the county formerly called Alexandria County officially took the name Arlington County ending decades of confusion",
         "1920s Arlington in a Dozen Objects", "https://arlhist.org/1920s-arlington-in-a-dozen-objects/"},
        {"The Virginia portion of the District of Columbia was returned by Act of Congress in 1846 following a referendum",
         "District of Columbia retrocession", "https://en.wikipedia.org/wiki/District_of_Columbia_retrocession"},
        {"The Commonwealth ceded land for the national capital in 1790 and received part of it back in 1846",
         "History of Virginia", "https://en.wikipedia.org/wiki/History_of_Virginia"},
    };
    c.query_table["born in Arlington County Virginia pitcher 1930s"] = {
        {"Billy Wagner born in 1971 in Marion is a retired relief pitcher who starred for Houston and New York",
         "List of people from Virginia", "https://en.wikipedia.org/wiki/List_of_people_from_Virginia"},
        {"Sean Robert Doolittle born September 26 1986 is a former professional relief pitcher raised in Virginia",
         "Sean Doolittle", "https://en.wikipedia.org/wiki/Sean_Doolittle"},
        {"Arlington County is a county in the Commonwealth of Virginia located directly across the Potomac River from Washington",
         "Arlington County, Virginia", "https://en.wikipedia.org/wiki/Arlington_County,_Virginia"},
        {"Virginia's recorded history spans the colonial settlement at Jamestown and the growth of its modern suburbs",
         "History of Virginia", "https://en.wikipedia.org/wiki/History_of_Virginia"},
        {"Alexandria is an independent city in northern Virginia on the west bank of the Potomac River",
         "Alexandria, Virginia", "https://en.wikipedia.org/wiki/Alexandria,_Virginia"},
    };
    c.query_table["third in saves 1950s nearly twenty saves"] = {
        {"Face was the first major leaguer to save twenty games more than once and led his league in saves three times",
         "Roy Face", "https://en.wikipedia.org/wiki/Roy_Face"},
        {"Hoyt Wilhelm recorded more than two hundred saves before saves became an official statistic",
         "Hoyt Wilhelm", "https://en.wikipedia.org/wiki/Hoyt_Wilhelm"},
        {"In his one full season 1963 his 21 saves ranked third in the American League",
         "Bill Dailey", "https://en.wikipedia.org/wiki/Bill_Dailey"},
        {"The 1963 bullpen featured Bill Dailey whose 21 saves that year ranked third in the American League",
         "Minnesota Twins", "https://en.wikipedia.org/wiki/Minnesota_Twins"},
        {"Many relief pitchers including Bill Dailey made their debut with the club during the post-war decades",
         "Cleveland Indians", "https://en.wikipedia.org/wiki/Cleveland_Indians"},
    };
    c.query_table["Arlington County Virginia born baseball pitcher"] = {
        {"Sean Robert Doolittle born September 26 1986 is a former professional relief pitcher raised in Virginia",
         "Sean Doolittle", "https://en.wikipedia.org/wiki/Sean_Doolittle"},
        {"This list collects notable people born in or strongly associated with the Commonwealth of Virginia",
         "List of people from Virginia", "https://en.wikipedia.org/wiki/List_of_people_from_Virginia"},
        {"Arlington has no incorporated towns within its borders and is among the smallest self-governing counties",
         "Arlington County, Virginia", "https://en.wikipedia.org/wiki/Arlington_County,_Virginia"},
        {"Billy Wagner born in 1971 in Marion is a retired relief pitcher who starred for Houston",
         "List of people from Virginia", "https://en.wikipedia.org/wiki/List_of_people_from_Virginia"},
        {"Elroy Leon Face born February 20 1928 in Stephentown New York was a pioneering relief specialist",
         "Roy Face", "https://en.wikipedia.org/wiki/Roy_Face"},
    };
    c.query_table["born 1930 Arlington Virginia baseball"] = {
        {"William Garland Dailey May 13 1935 to January 11 2025 was an American Major League Baseball relief pitcher born in Arlington County Virginia",
         "Bill Dailey", "https://en.wikipedia.org/wiki/Bill_Dailey"},
        {"Arlington County is a county in the Commonwealth of Virginia located directly across the Potomac River",
         "Arlington County, Virginia", "https://en.wikipedia.org/wiki/Arlington_County,_Virginia"},
        {"Billy Wagner born in 1971 in Marion is a retired relief pitcher who starred for Houston",
         "List of people from Virginia", "https://en.wikipedia.org/wiki/List_of_people_from_Virginia"},
        {"The Minnesota Twins are an American League club that moved from Washington to the Twin Cities in 1961",
         "Minnesota Twins", "https://en.wikipedia.org/wiki/Minnesota_Twins"},
        {"The club won the World Series in 1920 and 1948 and fielded pennant winners built on strong pitching",
         "Cleveland Indians", "https://en.wikipedia.org/wiki/Cleveland_Indians"},
    };

    c.entities = {
        {"Bill Dailey", "https://en.wikipedia.org/wiki/Bill_Dailey", "a mid-century relief pitcher",
         {{"debut_team", "the Cleveland Indians"}, {"birth_year", "1935"}, {"saves_1963", "21"}}},
        {"Arlington County", "https://en.wikipedia.org/wiki/Arlington_County,_Virginia", "a Virginia county",
         {{"renamed_year", "1920"}, {"retroceded_year", "1846"}}},
        {"Alexandria", "https://en.wikipedia.org/wiki/Alexandria,_Virginia", "an old port city",
         {{"rechartered_year", "1852"}}},
        {"Cleveland Indians", "https://en.wikipedia.org/wiki/Cleveland_Indians", "an American League club",
         {{"first_title_year", "1920"}}},
        {"Minnesota Twins", "https://en.wikipedia.org/wiki/Minnesota_Twins", "an upper-midwest ball club",
         {{"arrival_year", "1961"}}},
        {"Roy Face", "https://en.wikipedia.org/wiki/Roy_Face", "a pioneering relief specialist",
         {{"career_saves", "193"}}},
        {"Hoyt Wilhelm", "https://en.wikipedia.org/wiki/Hoyt_Wilhelm", "a knuckleball reliever",
         {{"debut_age", "29"}}},
        {"Sean Doolittle", "https://en.wikipedia.org/wiki/Sean_Doolittle", "a modern left-handed reliever",
         {{"all_star_count", "2"}}},
        {"Billy Wagner", "https://en.wikipedia.org/wiki/List_of_people_from_Virginia", "a hard-throwing closer",
         {{"birth_year", "1971"}}},
        {"Albert Einstein", "https://en.wikipedia.org/wiki/Albert_Einstein", "a famous physicist",
         {{"nobel_year", "1921"}}},
        {"Bern", "https://en.wikipedia.org/wiki/Bern", "a European capital",
         {{"founded_year", "1191"}}},
        {"Virginia", "https://en.wikipedia.org/wiki/History_of_Virginia", "a mid-Atlantic commonwealth",
         {{"cession_year", "1790"}}},
    };

    return c;
}

/// Benchmark question answered by the scripted demo episode below.
inline std::string demo_question() {
    return "A relief pitcher was born in the 1930s in a Virginia county that "
           "Congress gave back to Virginia in 1846 and that took its current "
           "name in 1920. In 1963 he finished third in his league in saves "
           "with just over twenty. With which team did he make his "
           "major-league debut?";
}

inline std::string demo_ground_truth() { return "the Cleveland Indians"; }

/// Assistant turns for a scripted policy that solves demo_question() against
/// demo_corpus(): five searches to pin down the county and the pitcher, one
/// browse of the pitcher's page, then the final answer.
inline std::vector<std::string> demo_episode_turns() {
    auto search_turn = [](const std::string& think, const std::string& query) {
        nlohmann::json call = {{"name", "search"}, {"arguments", {{"query", query}}}};
        return "<think>" + think + "</think>\n<tool_call>\n" + call.dump() + "\n</tool_call>";
    };
    nlohmann::json browse_call = {
        {"name", "browse"},
        {"arguments", {{"url", "https://en.wikipedia.org/wiki/Bill_Dailey"}}}};
    return {
        search_turn("The county clue points at the 1846 retrocession. I need the county "
                    "that was renamed in 1920.",
                    "Virginia county returned to Virginia in 1846 renamed in 1920"),
        search_turn("Arlington County fits. Now find pitchers born there in the 1930s.",
                    "born in Arlington County Virginia pitcher 1930s"),
        search_turn("The saves clue should narrow the list of relievers.",
                    "third in saves 1950s nearly twenty saves"),
        search_turn("Still ambiguous. Search the birthplace angle again.",
                    "Arlington County Virginia born baseball pitcher"),
        search_turn("One more pass with the birth decade spelled out.",
                    "born 1930 Arlington Virginia baseball"),
        "<think>Bill Dailey matches every clue. His page should name the debut club.</think>\n"
        "<tool_call>\n" + browse_call.dump() + "\n</tool_call>",
        "<think>The page confirms the 1961 debut with Cleveland.</think>\n"
        "He made his major-league debut with the Cleveland Indians.",
    };
}

}  // namespace forge
