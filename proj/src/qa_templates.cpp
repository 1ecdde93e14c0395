#include <fstream>
#include <sstream>

#include "editbench/error.hpp"
#include "editbench/qa.hpp"

namespace editbench {

namespace {

constexpr const char* kUpdateLocalityTemplate =
    R"(Given a fact triplet in the format (subject, relation, object) and a description of the relation, generate a question-answer pair where the answer is the object of the triplet. Ensure that the question explicitly references the relation and is structured to lead uniquely to the chosen answer, which must be the exact text of the object. Use the description of the relation to improve the specificity and clarity of the question. Make the question specific enough to ensure that there is only one possible correct answer, eliminating any ambiguity.

Instructions for Generation:
1. Construct the Question:
   - Ensure the question is directly tied to the relation and points exclusively to the selected answer.
   - Include additional context from the subject to make the question more specific and unambiguous.
   - Use the description of the relation to enhance the quality of the question.
   - Use only the exact text of the object in the answer.
2. Format: Provide the question-answer pair in the following format:
   - Q:
   - A:

Examples:

Fact Triplet: Turnberry Lighthouse, color, white
Relation Description: The color of the subject.
Q: What is the color of Turnberry Lighthouse?
A: white

Fact Triplet: Folsom Library, part of, Rensselaer Libraries
Relation Description: part of this subject; inverse property of “part of” (P361). See also “has parts of the class” (P2670).
Q: What institution does Folsom Library belong to?
A: Rensselaer Libraries

Fact Triplet: Volt Europa, subsidiary, Volt Netherlands
Relation Description: A company controlled by another company.
Q: What is the name of the subsidiary of Volt Europa in the Netherlands?
A: Volt Netherlands

Fact Triplet: Zonia Baber, educated at, Chicago State University
Relation Description: The institution where the subject received their education.
Q: At which university did Zonia Baber receive her education?
A: Chicago State University

Task:

According to the instructions and examples, provide a QA pair for the following fact triplet:

Fact Triplet: {subject}, {relation}, {object}
Relation Description: {relation_description}
)";

constexpr const char* kRephraseBody =
    R"(You are given a question-answer pair. Reformulate the question such that its content remains identical and the given answer is still the only accurate answer.

Instructions for Generation:
1. Question Reformulation:
   - Restructure the question while maintaining the same content and context.
   - Ensure that the answer provided in the original question remains the only correct answer.
2. Response Format: Provide the reformulated question in the following format:
   - Reformulated Question:

Examples:
Original Question: What is the capital of the United States?
Answer: Washington, D.C.
Reformulated Question: What city serves as the capital of the United States?

Original Question: Who painted the Mona Lisa?
Answer: Leonardo da Vinci
Reformulated Question: By whom was the Mona Lisa painted?

Original Question: When was the Declaration of Independence signed?
Answer: July 4, 1776
Reformulated Question: On what date was the Declaration of Independence signed?

Task:
Original Question: {question}
Answer: {answer}
)";

constexpr const char* kMhopTemplate =
    R"(Given a multi-hop fact tuple in the format (entity-0, relation-1, [MASKED-ENTITY-1], relation-2, entity-2) and a description of each relation, generate a multi-hop question-answer pair where the answer is “entity-2.” Ensure that the question respects the directional nature of each relation, especially relation-2, so that it logically reflects how the masked entity-1 relates to entity-2. The question should be structured to uniquely lead to entity-2 as the answer.

Instructions for Generation:
1. Construct the Question:
   - Design the question to identify entity-2 by logically combining relation-1 and relation-2.
   - Respect the directionality of each relation as described: if relation-2 describes a relation where [MASKED-ENTITY-1] is the subject and entity-2 is the object (e.g., “is a member of”), ensure this direction is reflected in the question.
   - Avoid reversing the direction of relation-2, and confirm the natural flow between [MASKED-ENTITY-1] and entity-2.
   - Include context from entity-0 to make the question clear and specific.
   - Do not reference [MASKED-ENTITY-1] in the answer; only entity-2 should be the answer.
2. Format: Provide the output in the following format:
   - Q: [Constructed Question]
   - A: [entity-2]

Examples:

Fact Tuple: Yasis Malih, place of birth, [MASKED-ENTITY-1], member of, Organization of World Heritage Cities
Relation Descriptions: Place of birth of this person., Membership of this place.
Q: Which organization is the place of birth of Yasis Malih a member of?
A: Organization of World Heritage Cities

Fact Tuple: Intelligent Land Investments, instance of, [MASKED-ENTITY-1], owned by, entrepreneur
Relation Descriptions: Instance type of this entity., Owner of this type.
Q: Who owns the instance of Intelligent Land Investments?
A: Entrepreneur

Fact Tuple: Josef Novak, country of citizenship, [MASKED-ENTITY-1], highest point, Kékes
Relation Descriptions: Country of citizenship of this person., Highest point of this place.
Q: What is the highest point of the country of citizenship of Josef Novak?
A: Kékes

Fact Tuple: Pholidaster squamatus, taxon author, [MASKED-ENTITY-1], field of work, starfish
Relation Descriptions: Taxon author of this species., Field of work of this person.
Q: What is the field of work of the taxon author of Pholidaster squamatus?
A: Starfish

Task:

According to these instructions and examples, provide a multi-hop QA pair for the following fact tuple:

Fact Tuple: {entity0}, {relation1}, [MASKED-ENTITY-1], {relation2}, {entity2}
Relation Descriptions: {relation1_description}, {relation2_description}
)";

const char* file_name(TemplateId id) {
    switch (id) {
        case TemplateId::UpdateLocality: return "update_locality.txt";
        case TemplateId::Rephrase: return "rephrase.txt";
        case TemplateId::Persona: return "persona.txt";
        case TemplateId::Mhop: return "mhop.txt";
    }
    return "";
}

bool is_name_char(char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_'; }

const std::string& description_or_label(const PropertyRef& r) {
    return r.description.empty() ? r.label : r.description;
}

}  // namespace

const std::vector<PersonaSpec>& default_personas() {
    static const std::vector<PersonaSpec> personas{
        {"Detective",
         "You are a world-weary detective narrating your investigations. Your tone is gritty, mysterious, "
         "and evocative of noir fiction. Reformulate the following questions as if you’re puzzling out "
         "clues in a case. Keep the core meaning intact but phrase it in your distinct detective style."},
        {"Casual",
         "You are a casual, friendly conversationalist with a relaxed and approachable tone. You’re curious "
         "and engaging, as if you’re chatting with a friend over coffee or in a group discussion. "
         "Reformulate the following questions to sound natural and conversational while keeping the core "
         "meaning intact."},
        {"Pirate",
         "You are a swashbuckling pirate with a flair for colorful language and sea-themed metaphors. Your "
         "tone is bold, rough, and full of pirate lingo, as if you’re recounting tales from the high seas. "
         "Reformulate the following questions to sound like they’re being asked by a true pirate. Keep the "
         "core meaning intact but add a piratical twist."},
        {"Philosopher",
         "You are an ancient philosopher, deeply contemplative and wise, always pondering the greater truths "
         "of existence. Your tone is reflective, profound, and formal, as if you are crafting a dialogue or "
         "treatise on the nature of knowledge and events. Reformulate the following questions as if they are "
         "inquiries befitting philosophical discourse. Keep the core meaning intact but phrase it in your "
         "distinct, thoughtful style."},
        {"Caveman",
         "You are a caveman, speaking in simple and primitive language, with short sentences and limited "
         "vocabulary. Your tone is direct, straightforward, and reflects the early stages of human "
         "communication. Reformulate the following questions in a way that matches your basic and "
         "minimalistic speech style, while keeping the core meaning intact."},
    };
    return personas;
}

const PersonaSpec* find_persona(std::string_view name) {
    for (const auto& p : default_personas())
        if (p.name == name) return &p;
    return nullptr;
}

std::string_view to_string(TemplateId id) {
    switch (id) {
        case TemplateId::UpdateLocality: return "update_locality";
        case TemplateId::Rephrase: return "rephrase";
        case TemplateId::Persona: return "persona";
        case TemplateId::Mhop: return "mhop";
    }
    return "";
}

TemplateRegistry::TemplateRegistry() {
    templates_[TemplateId::UpdateLocality] = kUpdateLocalityTemplate;
    templates_[TemplateId::Rephrase] = kRephraseBody;
    templates_[TemplateId::Persona] = std::string("{persona_description}\n\n") + kRephraseBody;
    templates_[TemplateId::Mhop] = kMhopTemplate;
}

TemplateRegistry TemplateRegistry::load_dir(const std::filesystem::path& dir) {
    TemplateRegistry registry;
    for (auto id : {TemplateId::UpdateLocality, TemplateId::Rephrase, TemplateId::Persona, TemplateId::Mhop}) {
        std::ifstream in(dir / file_name(id), std::ios::binary);
        if (!in) continue;
        std::ostringstream ss;
        ss << in.rdbuf();
        registry.set(id, ss.str());
    }
    return registry;
}

const std::string& TemplateRegistry::get(TemplateId id) const { return templates_.at(id); }

void TemplateRegistry::set(TemplateId id, std::string text) { templates_[id] = std::move(text); }

std::string TemplateRegistry::render(TemplateId id, const std::map<std::string, std::string>& values) const {
    const auto& tpl = get(id);
    std::string out;
    out.reserve(tpl.size() + 256);
    for (std::size_t i = 0; i < tpl.size();) {
        if (tpl[i] == '{') {
            auto j = i + 1;
            while (j < tpl.size() && is_name_char(tpl[j])) ++j;
            if (j < tpl.size() && tpl[j] == '}' && j > i + 1) {
                const auto name = tpl.substr(i + 1, j - i - 1);
                auto it = values.find(name);
                if (it == values.end() || it->second.empty()) throw RenderError(name);
                out += it->second;
                i = j + 1;
                continue;
            }
        }
        out.push_back(tpl[i++]);
    }
    return out;
}

std::string render_prompt(const TemplateRegistry& templates, const Triplet& fact) {
    return templates.render(TemplateId::UpdateLocality,
                            {{"subject", fact.subject.label},
                             {"relation", fact.relation.label},
                             {"object", object_text(fact.object)},
                             {"relation_description", description_or_label(fact.relation)}});
}

std::string render_prompt(const TemplateRegistry& templates, const QaPair& qa) {
    return templates.render(TemplateId::Rephrase, {{"question", qa.question}, {"answer", qa.answer}});
}

std::string render_prompt(const TemplateRegistry& templates, const QaPair& qa, const PersonaSpec& persona) {
    return templates.render(TemplateId::Persona, {{"persona_description", persona.description},
                                                  {"question", qa.question},
                                                  {"answer", qa.answer}});
}

std::string render_prompt(const TemplateRegistry& templates, const MhopQuintuple& tuple) {
    return templates.render(TemplateId::Mhop, {{"entity0", tuple.e0.label},
                                               {"relation1", tuple.r1.label},
                                               {"relation2", tuple.r2.label},
                                               {"entity2", tuple.e2.label},
                                               {"relation1_description", description_or_label(tuple.r1)},
                                               {"relation2_description", description_or_label(tuple.r2)}});
}

}  // namespace editbench
