#include "lifesim/prompts.hpp"

#include <cctype>

#include "lifesim/errors.hpp"
#include "lifesim/jsonl.hpp"

namespace lifesim {

namespace {

bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

}  // namespace

std::string render_template(std::string_view tpl,
                            const std::map<std::string, std::string>& bindings) {
    std::string out;
    out.reserve(tpl.size());
    for (std::size_t i = 0; i < tpl.size();) {
        char c = tpl[i];
        if (c == '{' && i + 1 < tpl.size() && tpl[i + 1] == '{') {
            out += '{';
            i += 2;
            continue;
        }
        if (c == '}' && i + 1 < tpl.size() && tpl[i + 1] == '}') {
            out += '}';
            i += 2;
            continue;
        }
        if (c == '{') {
            std::size_t j = i + 1;
            while (j < tpl.size() && ident_char(tpl[j])) ++j;
            if (j > i + 1 && j < tpl.size() && tpl[j] == '}') {
                std::string name(tpl.substr(i + 1, j - i - 1));
                auto it = bindings.find(name);
                if (it == bindings.end())
                    throw ValidationError("unbound placeholder: " + name);
                out += it->second;
                i = j + 1;
                continue;
            }
        }
        out += c;
        ++i;
    }
    return out;
}

bool PromptCatalog::has(std::string_view name) const {
    return templates_.find(name) != templates_.end();
}

const std::string& PromptCatalog::raw(std::string_view name) const {
    auto it = templates_.find(name);
    if (it == templates_.end())
        throw ValidationError("unknown prompt template: " + std::string(name));
    return it->second;
}

std::string PromptCatalog::render(std::string_view name,
                                  const std::map<std::string, std::string>& bindings) const {
    return render_template(raw(name), bindings);
}

std::vector<std::string> PromptCatalog::names() const {
    std::vector<std::string> out;
    out.reserve(templates_.size());
    for (const auto& [k, _] : templates_) out.push_back(k);
    return out;
}

PromptCatalog PromptCatalog::from_dir(const std::filesystem::path& dir) {
    PromptCatalog cat;
    if (!std::filesystem::is_directory(dir))
        throw ValidationError("prompt directory not found: " + dir.string());
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
        cat.templates_[entry.path().stem().string()] = read_text_file(entry.path());
    }
    return cat;
}

PromptCatalog::PromptCatalog() {
    auto& t = templates_;

    // --- corpus construction -------------------------------------------------

    t["pseudo_profile"] = R"TPL(Please generate a user persona based on the user's travel trajectory below, following the format and requirements illustrated in the examples.
### Travel Trajectory
{trajectory}
### User Persona Requirements and Examples
Generate your response using the following template:
[age range], [race], [religious affiliation or not], [residence type (Cities/Suburbs)], [income level (High/Low Income)], [is working?]. Personality traits include: [a few adjectives]. Preferences expressed in daily life and communication include: [a few descriptive sentences].

{examples}

Output your answer strictly in the following JSON format, enclosed between ```json and ```:
```json
{
    "profile": "xxx"
}
```
You may provide your reasoning process before outputting the final response.)TPL";

    t["intent_normalize"] = R"TPL(Please determine whether the user question provided below belong to the domain {theme}, and users might ask AI assistant/coach during daily life.
If it is, rephrase it into a more formal expression of user intention.
Requests involving code snippets, academic papers, or general information lookup fall outside the scope of our consideration.

{examples}

### Current User Question
{content}
### Output Format
Output strictly in the following JSON format:
```json
{
    "is_valid_intent": "true/false",
    "intent": "xxx"
}
```
Where:
- is_valid_intent is your judgment (true or false),
- intent is the rewritten, formal user intent statement (if applicable).
You coul give your reasoning process before the final answer.)TPL";

    t["trigger_events"] = R"TPL(Please generate possible triggering events based on the user intention provided below - i.e., real-life situations that could lead the user to seek help from a {theme} AI assistant or coach.
### Example
For the intention: "The user wants to understand whether using a weighted blanket affects muscle growth and whether it has any impact on exercise or health", a possible triggering event could be: "Recently resumed strength training at the gym but noticed that muscle growth has significantly slowed down or plateaued."
### User Intention
{content}
### Requirements
Respond in the following JSON format:
```json
[
    "xxx",
    ...
]
```
Generate exactly three distinct triggering events.)TPL";

    t["tagging"] = R"TPL(Please annotate the event and desire below with their associated keywords, location, and time attributes.
### Event
{event}
### Desire
{desire}
### Requirements
Output strictly in the following JSON format, enclosed between ```json and ```:
```json
{
    "keywords": ["xxx", ...],
    "location": "xxx",
    "time": "xxx"
}
```
Keep each keyword short; use "any" for location or time when the text gives no constraint.)TPL";

    // --- cognitive / event engine --------------------------------------------

    t["hypothesis"] = R"TPL(### Requirements
{description}

- Please output your reply in the following JSON format between the ```json and ``` code fences:
```json
{{
    "event": "description of the event"
}}
```
- Based on the user profile and historical events, generate events that match the user profile, do not duplicate historical events, and contain no logical errors.

### Input
[User Profile]
{user_profile}
[User Longterm Goal]
{goal}
[User's Experienced Events]
{event_sequences}
[Current Environment]
{location_desc}
[Output])TPL";

    t["rerank"] = R"TPL(### Requirements
You will be given 9 candidate events. Based on the user profile, longterm goal, previously experienced events, and the current situation, rank the events from most likely to least likely to occur:
- Please select the events that are most likely to happen and output the list of event numbers in descending order of likelihood, in JSON format between ```json and ```. For example: `[3,1,7,2,9,4]`:
```json
{{
    "ranked_events": [x, x, x, x, x, x, x, x, x],
    "has_possible_event": "true/false"
}}
```
- If some events are impossible under the current situation, do not include them in the candidate list.
- Determine whether there is at least one event that could possibly occur in the current environment. If so, set `"has_possible_event"` to `true`; otherwise, set it to `false`.
- `ranked_events` is the reordered list of event numbers, and `has_possible_event` indicates whether any event could possibly occur.
- Avoid including events that are essentially the same as previously experienced ones.
- You may first describe your reasoning process, then provide the JSON output. During the reasoning, consider factors such as the user's preferences, the logical coherence with longterm goal and previous events, and the suitability to the current environment.

### Input
[User Profile]
{user_profile}
[User Longterm Goal]
{goal}
[User's Experienced Events]
{event_sequences}
[Current Environment]
{location_desc}
[Candidate Events]
{events_text}
[Output])TPL";

    t["refinement"] = R"TPL(You will be given one candidate event and a user intent.
Your task is to revise and refine them so that both align with the user's profile, long-term goal, and current environmental context, while maintaining internal consistency across the event sequence.
### Requirements
- Adjust details such as subject, location, weather, time, or other contextual factors to make the event realistic and coherent with the given user profile and prior events.
- Ensure the revised event does not contradict any known facts or previous settings.
- The intent should remain essentially the same in meaning but must be expressed naturally and fit the updated event context.
- The intent should represent a single conversational goal (i.e., the user's focus within one dialogue turn), not a long-term plan.
- Rephrase both the event and intent in a distinct linguistic style from any previously seen phrasing-avoid repetition or mechanical patterns.
- Remove any placeholders or meaningless symbols (e.g., "NAME_1", "XXX", "...").
### Output Format:
Please output your final answer strictly in the following JSON structure (enclosed within ```json and ```):
{{
    "event": "Describe the content of the revised event.",
    "intent": "Describe the user's corresponding intent under this event context."
}}
Provide your reasoning before the final answer.
In your reasoning, consider: (1) whether the event and intent satisfy the requirements; (2) whether the intent is realistically something a human would ask an AI assistant.
### Examples:
{example_1}
{example_2}

### Input
[User Profile]
{user_profile}
[User Longterm Goal]
{goal}
[User's Experienced Events]
{event_sequences}
[Current Environment]
{location_desc}
[Current Event and Intent]
Current user event: {event_text}
Current user intent: {intent}
[Output])TPL";

    // --- behavior engine ------------------------------------------------------

    t["memory_perception"] = R"TPL(Please review the following user-assistant conversation and determine whether the assistant's last reply should be stored as long-term memory.
If it should, extract the most informative or transferable content and save it in a "query - response" format.
### User Profile
{profile}
### Recent Life Event
{event}
### User's Intent for This Conversation
{intent}
### Conversation Scenario
{dialogue_scene}
### Historical Dialogue Context
{conversation_context}
### Assistant's Latest Reply
{content}

### Requirements
- Extract information only from the assistant's last reply; do not add new content.
- Output in the following JSON format, enclosed between ```json and ```:
```json
{{
  "need_store": "true/false",
  "query": "xxxx/-1",
  "response": "xxxx/-1"
}}
```
Where:
- need_store: Set to true if the assistant's reply contains valuable knowledge or transferable advice; otherwise, set to false and let query and response be -1.
- query: Summarize the core question or topic addressed in the assistant's reply in one concise sentence (e.g., "Possible causes and improvements for elevated breathing rate').
- response: Provide the specific explanation or improvement advice corresponding to the query, avoiding vague encouragement or emotional expressions.)TPL";

    t["emotion"] = R"TPL(Based on the user's profile, memory perception, and the dialogue context, select the emotion that the user's next reply is most likely to convey from the candidate emotions.
### User Profile
{profile}
### Recent Life Event
{event}
### User's Intent for This Conversation
{intent}
### Conversation Scenario
{dialogue_scene}
### Historical Dialogue Context
{conversation_context}
### User Memory Perception
{perception}
### Candidate Emotions
{emotion_options}

### Requirements
- Output in the following JSON format, enclosed between ```json and ```:
```json
{{
  "emotion": "xxx"
}}
```
Where:
- emotion: The emotion of the user's next reply, selected from the candidate emotions.)TPL";

    t["action"] = R"TPL(Based on the dialogue context, please choose the user's next action.
### Historical Dialogue Context
{conversation_context}
### User Profile
{profile}
### Recent Life Event
{event}
### User's Intent for This Interaction
{intent}
### User Emotion
{emotion}
### User Memory Perception
{perception}
### Candidate Actions
{action_options}

Please decide according to the following criteria:
- Choose "End Conversation" if the user's intent has been satisfactorily addressed, the user feels there's no need to continue, or a long waiting period is about to begin.
- Choose "Continue Conversation" if there are remaining questions to resolve, or if the user is not satisfied with the assistant's reply and needs further interaction.
- Unless the assistant's reply is very unsatisfactory, try to express the user's full intent over multiple turns before ending the conversation.

### Requirements
- Strictly select one action from the candidate actions above, and output in the following JSON format, enclosed between ```json and ```:
```json
{{
    "action": "xxx"
}}
```
Where action is your selected action and must be one of the options provided.
- You may first explain your reasoning, then give the final chosen action.)TPL";

    t["user_system"] = R"TPL(You are a user of an AI assistant. Based on the following personalized information and current context, start or continue a conversation with the AI assistant.
### Background
[User Profile]
{profile}
[Current Dialogue Scene]
{dialogue_scene}
[Recent Life Event]
{event}
[Primary Intent of This Conversation]
{intent}
[Explicit Intent List]
{explicit_intent}
[Implicit Intent List]
{implicit_intent}
### Requirements
[Basic]
- Keep each message short, natural, and conversational.
- Speak in everyday English - no technical or academic phrasing.
- Avoid revealing personal information or mentioning specific life events directly.
- Stay emotionally moderate - no exaggerated reactions or exclamations.
- Output only the user's dialogue line (no explanations or notes).
[About Preferences]
- Your speech must fully reflect the preferences in the user profile.
- If the assistant's previous message contradicts those preferences, respond with mild disapproval or a subtle correction.
[About Intent]
- Reveal your intent gradually across multiple turns.
- Each turn should focus on one clear question or small sub-goal.
- Explicit intents are clear requests or consultation goals you directly state, used to drive task completion or problem-solving.
- Implicit intents are underlying needs - respond positively when the assistant aligns with them, or show gentle dissatisfaction when it doesn't.
- Each utterance should be concise, natural, and consistent with your personality and preferences, without revealing your full intent all at once.

Now, take on the role of this user and naturally begin or continue a conversation with the AI assistant.)TPL";

    t["assistant_system"] = R"TPL(You are a virtual AI assistant. Your goal is to interact with the user, and meet the user's needs.
### User Background
[Predicted User Profile]
{profile}
[Current Dialogue Scene]
{dialogue_scene}
### Requirements
[Basic]
* Do not generate any explanatory text enclosed in parentheses; output plain dialogue only.
* Do not call any external tools (including phone, internet, etc.).
* Reply in English.
* Before responding, you may receive memory summaries related to the current message, derived from previous conversations. Use them if they help you better understand the user; otherwise, ignore them.)TPL";

    // --- benchmark construction -----------------------------------------------

    t["sub_intents"] = R"TPL(You are an expert in intent understanding and user-goal modeling.
Your task is to take a given user intent and decompose it into multiple sub-intents (maximum 6).
Each sub-intent should represent a distinct and concrete aspect of what the user hopes to achieve, feel, or resolve.

### Requirements
- Each sub-intent must be concise (one sentence, less than 25 words).
- Cover different facets (e.g., practical need, emotional need, cognitive goal, relational concern).
- Cover both explicit and implicit user needs.
- Avoid restating the same meaning with different wording.
- Output between 2 - 6 sub-intents depending on complexity.

### Output Format
Output in JSON format, enclosed within ```json and ``` markers:
```json
[
  "xxxx",
  "xxxx",
  ...
]
```
- Please output in English.
- You could give your reasoning process before the final answer.

### Examples
{examples}

### Input:
[User profile]
{user_profile}
[Dialogue scene]
{dialogue_scene}
[Event]
{event}
[User intent]
{user_intent}
[Output])TPL";

    t["intent_classify"] = R"TPL(You are an expert in user intent understanding and socio-cognitive reasoning. Your goal is to analyze a list of sub-intents derived from a user's broader goal. For each sub-intent, determine whether it is explicit (task-oriented, consciously expressed) or implicit (emotionally, motivationally, or value-driven, needs more reasoning effort to recognize). Before giving the final JSON, you must first analyze the logical relationship between explicit and implicit intents-how they connect or evolve from one another.
You will be given: (1) User profile: basic demographic and psychological description. (2) Event: the user's current experience or situation. (3) Intent decomposition: a list of sub-intents previously extracted from the user's main intent.
### Definitions
- Explicit Intent: The user's directly stated, goal-oriented purpose, usually related to obtaining information, solutions, plans, or actions.
- Implicit Intent: The user's underlying emotional, motivational, or value-based need that is not directly requested but implied through tone or context.

Logical relationships can include: (1) Causal: Implicit emotion drives explicit action. (2) Hierarchical: Implicit intent represents a higher-level value behind multiple explicit intents. (3) Temporal / Sequential: Explicit attempts evolve into implicit needs (or vice versa). (4) Complementary: Explicit and implicit intents jointly fulfill the same overarching goal.
### Output Format
#### Step 1: Reasoning (in plain English)
A short paragraph (3-6 sentences) describing: (1) Which sub-intents are explicit or implicit. (2) How the implicit intents motivate, explain, or result from the explicit ones. (3) What overall logic connects them.
#### Step 2: Structured JSON, enclosed within ```json and ``` markers:
```json
[{"description": "...", "type": "explicit/implicit"}, ...]
```
- Respond in English.
- There should be no fewer than two intents for each type (if the total intent number >= 4, else at least one for each) - both explicit and implicit - to maintain sufficient type diversity.
### Examples
{examples}
### Input:
[User profile]
{user_profile}
[Dialogue scene]
{dialogue_scene}
[Event]
{event}
[User sub-intents]
{user_sub_intent}
[Output])TPL";

    // --- conversation judges ----------------------------------------------------

    t["intent_recognition"] = R"TPL(You are an evaluator assessing whether an AI assistant's predicted intent correctly matches the **real user intent** in a given dialogue.
You will be provided with:
* Intent checklist - a structured list representing the verified components of the user's real intent.
* Predicted intents - the assistant's inferred or generated intent statements during the whole conversation.
* Conversation - showing the interaction between the user and the assistant.

### Requirements
Your task is to evaluate how accurately the predicted intent aligns with the intent checklist.
For each checklist item, determine whether the predicted intent successfully captures that element.
Each dimension in the checklist should be scored as follows:
* 1 = The predicted intent correctly covers this item
* 0 = The predicted intent fails to capture or contradicts this item

### Output Format
Your final answer should follow this format:
```json
{{
  "Checklist item 1": 1/0,
  "Checklist item 2": 1/0,
  ...
}}
```
Before your response, provide: **Dimension-by-dimension assessment (bullet list)** - show each checklist item, a short justification, and its binary score (1/0).

### Input
[Intent checklist]
{checklist}
[Conversation]
{conversation}
[Predicted intent]
{predicted_intent}
[Output])TPL";

    t["intent_completion"] = R"TPL(You are an evaluator assessing whether an AI assistant has effectively fulfilled the user's intent in a given dialogue.
You will be provided with:
* User profile - describing the user's characteristics and communication tendencies.
* Dialogue scene - describing the environmental and contextual background.
* User intent - describing what the user wanted to achieve through the conversation.
* Conversation - showing the actual interaction between the user and the assistant.

### Requirements
Your task is to evaluate how accurately the assistant's response meets the user's intent, based on the key dimensions listed in the checklist.
Each dimension in the checklist should be scored as follows:
* 1 = The assistant correctly fulfills this intent dimension
* 0 = The assistant fails to fulfill or contradicts this intent dimension

### Output Format
Your final answer should follow this format:
```json
{{
  "Checklist item 1": 1/0,
  "Checklist item 2": 1/0,
  ...
}}
```
Before your response, provide: **Dimension-by-dimension assessment (bullet list)** - show each checklist item, a short justification, and its binary score (1/0).

### Input
[User profile]
{user_profile}
[Dialogue scene]
{dialogue_scene}
[Intent checklist]
{checklist}
[Conversation]
{conversation})TPL";

    t["naturalness"] = R"TPL(You are an evaluator assessing the fluency and naturalness of an AI assistant's conversation with a user.
You will be provided with:
* User profile - describing the user's characteristics and communication tendencies.
* Dialogue scene - describing the situational context of the conversation.
* User intent - describing what the user wanted to achieve through the interaction.
* Conversation - showing the actual interaction between the user and the assistant.

### Requirements
Your task is to determine whether the AI assistant's responses are fluent, coherent, and natural throughout the conversation. Analyze it from multiple relevant dimensions:
* Language is conversational, avoiding overly long, formal, or bookish expressions.
* Vocabulary is natural, everyday, and varied, avoiding repetition or overly technical terms.
* Tone and emotion match the user's preferred style, showing empathy, engagement, and responsiveness.
* Replies actively incorporate and respond to user-provided details, making the conversation feel personalized.
* Replies include proactive questions to guide the conversation, rather than only passively responding.

Your response should be structured in JSON format, enclosed in ```json and ```:
```json
{{
  "rating": 1-5
}}
```
Where:
    * 1 = Very unnatural or disfluent
    * 2 = Mostly unnatural, noticeable problems in phrasing
    * 3 = Moderately fluent but with some issues
    * 4 = Mostly natural, minor disfluency
    * 5 = Fully fluent and natural

Before your JSON output, provide: (1) A concise evaluation (2-3 sentences) summarizing the overall fluency of the assistant's replies. (2) A dimension-by-dimension assessment (as bullet points).

### Input
[User profile]
{user_profile}
[Dialogue scene]
{dialogue_scene}
[User intent]
{user_intent}
[Conversation]
{conversation})TPL";

    t["coherence"] = R"TPL(You are an evaluator assessing the coherence and logical consistency of an AI assistant's conversation with a user.
You will be provided with:
* User profile - describing the user's characteristics and communication tendencies.
* Dialogue scene - describing the situational context of the conversation.
* User intent - describing what the user wanted to achieve through the interaction.
* Conversation - showing the actual interaction between the user and the assistant.
### Requirements
Your task is to determine whether the AI assistant's responses are coherent, logically consistent, and contextually aligned throughout the dialogue.
Analyze it from multiple relevant dimensions:
* Responses should focus on the user's main concerns, avoiding unnecessary digressions or repetitive generic advice.
* Each response should be logically consistent, avoiding contradictions or redundant statements that add no new value.
* Responses should correctly reference and integrate information from previous turns, demonstrating understanding of the context.
* Pronouns and references should be clear, avoiding ambiguity or unclear referents.
* Information should be organized coherently, with a clear logical order that is easy to follow.

Your response should be structured in JSON format, enclosed in ```json and ```:
```json
{{
  "rating": 1-5
}}
```
Where:
    * 1 = Completely incoherent or contradictory
    * 2 = Mostly incoherent, several logical gaps or inconsistencies
    * 3 = Partially coherent with some logical gaps or inconsistencies
    * 4 = Mostly coherent, minor logical gaps or inconsistencies
    * 5 = Fully coherent and logically consistent
Before your JSON output, provide:
1. A concise evaluation (2-3 sentences) summarizing the overall coherence of the assistant's replies.
2. A dimension-by-dimension assessment (as bullet points).

### Input
[User profile]
{user_profile}
[Dialogue scene]
{dialogue_scene}
[User intent]
{user_intent}
[Conversation]
{conversation})TPL";

    t["environment_alignment"] = R"TPL(You are an evaluator assessing whether an AI assistant's replies remain contextually consistent and strategically appropriate with respect to the environmental conditions of the conversation, such as time, location, and weather.
You will be provided with:
* User profile - describing the user's characteristics and communication tendencies.
* Dialogue scene - describing the time, location, and weather in which the conversation takes place.
* User intent - describing what the user wanted to achieve through the interaction.
* Conversation - showing the actual interaction between the user and the assistant.

### Requirements
Your task is to determine whether the assistant's suggestions and statements fit the stated environment. Analyze it from multiple relevant dimensions:
* Advice is feasible at the stated time of day and day of week.
* Advice respects the stated location and its practical constraints.
* Advice accounts for the stated weather conditions.
* The assistant does not contradict any environmental fact given in the scene.

Your response should be structured in JSON format, enclosed in ```json and ```:
```json
{{
  "rating": 1-5
}}
```
Where:
    * 1 = Replies ignore or contradict the environment throughout
    * 2 = Replies mostly ignore the environment, several conflicts
    * 3 = Replies partially reflect the environment, some conflicts
    * 4 = Replies mostly fit the environment, minor slips
    * 5 = Replies are fully consistent and strategically appropriate for the environment

Before your JSON output, provide a dimension-by-dimension assessment (as bullet points).

### Input
[User profile]
{user_profile}
[Dialogue scene]
{dialogue_scene}
[User intent]
{user_intent}
[Conversation]
{conversation})TPL";

    t["persona_alignment"] = R"TPL(You are an evaluator assessing how well an AI assistant's replies align with the user's preferences.
You will be provided with:
* User preferences - a list of preference dimensions (e.g., "Need for autonomy", "Preference for emotional support") and their expected values or tendencies.
* Conversation - showing the interaction between the user and the assistant.

### Requirements
Your task is to evaluate the alignment for each preference dimension individually.
For each dimension listed in the user profile, determine whether the assistant's replies conform to that specific preference.

#### Evaluation Criteria
For each preference dimension:
* 1 = The assistant's reply clearly aligns with this preference dimension.
* 0 = The assistant's reply contradicts or fails to reflect this preference dimension.
Then, provide an overall summary at the end.

### Output Format
Your response should contain:
1. Dimension-by-Dimension Assessment - a structured list showing each preference dimension, a short justification, and its binary alignment score.
2. JSON Output - containing all dimension scores.
```json
{{
  "Preference for xxx": 1/0,
  ...
}}
```

### Examples
{example_1}

### Input
[User Preferences]
{user_preferences}
[Conversation]
{conversation}
[Output])TPL";

    // --- event-sequence judges ---------------------------------------------------

    t["event_persona_alignment"] = R"TPL(You are an expert in evaluating the plausibility of event sequences, tasked with assessing whether a generated sequence of events aligns with a given user profile.
You will receive:
- A User Profile
- An Event Sequence
### Output Format
A JSON object containing only the final score:
Reasoning process ...
```json
{{
    "score": 1/2/3/4/5
}}
```
You may first output your reasoning process, followed by the JSON result.
### Input
[User Profile]
{user_profile}
[Event Sequences]
{event_sequences})TPL";

    t["event_coherence"] = R"TPL(You are an expert in evaluating the plausibility of event sequences, tasked with assessing whether the chronological and logical flow between events is coherent and reasonable.
You will receive:
An Event Sequence
### Output Format
A JSON object containing only the final score:
Reasoning process ...
```json
{{
    "score": 1/2/3/4/5
}}
```
You may first output your reasoning process, followed by the JSON result.
### Input
[Event Sequences]
{event_sequences})TPL";

    t["event_naturalness"] = R"TPL(Your task is to assess the extent to which a given event sequence demonstrates naturalness and aligns with realistic human behavior.
You will receive:
- An Event Sequence
### Output Format
A JSON object containing only the final score:
Reasoning process ...
```json
{{
    "score": 1/2/3/4/5
}}
```
You may first output your reasoning process, followed by the JSON result.
### Input
[Event Sequences]
{event_sequences})TPL";

    // --- simulated-user quality judge ---------------------------------------------

    t["behavior_quality"] = R"TPL(You are a strict dialogue quality evaluator. Please assess the user's utterances in the given simulated user dialogue across the following four dimensions.

### Dimension 1: Alignment with the user's predefined intent
* Definition: Whether the user's dialogue faithfully expresses the specified user intent.
* Scoring rubric:
  * 5: Fully matches the intent with no deviation; both the core need and details are accurately reflected.
  * 4: Largely matches the intent, with only very minor omissions that do not affect understanding.
  * 3: Partially matches the intent; the overall direction is correct, but there are notable missing details or slight misunderstandings.
  * 2: Mostly deviates from the intent; only a small amount of relevant information remains.
  * 1: Severely deviates from the intent or does not follow it at all; the output is unrelated to the specified needs.

### Dimension 2: Alignment with the user persona
* Definition: Whether the user's dialogue conforms to the specified user persona information and preferences.
* Scoring rubric:
  * 5: Strictly consistent with the persona; all mentioned behaviors and statements align with the specification, with no contradictions.
  * 4: Generally consistent with the persona, with occasional minor deviations that do not harm overall coherence.
  * 3: Mostly consistent with the persona, but there are clear omissions or small-scale contradictions.
  * 2: Multiple conflicts with the persona specification; coherence is weak.
  * 1: Severely violates the persona; behavior is completely inconsistent with the specification.

### Dimension 3: Alignment with the event/context background
* Definition: Whether the user's dialogue fully follows the specified dialogue scenario, including time, location, setting, and events.
* Scoring rubric:
  * 5: Fully matches the background setting; content is highly consistent with the scenario, with no contradictions or awkwardness.
  * 4: Basically matches the background setting; overall reasonable, with only very minor details slightly inconsistent with the scenario.
  * 3: Largely matches the background setting, but there are local inconsistencies or potential conflicts that affect coherence.
  * 2: Most content does not follow the background; only a few scenario-related elements remain, and there are clear conflicts.
  * 1: Completely violates the background setting; the output is strongly contradictory to the scenario or entirely irrelevant.

### Dimension 4: Naturalness of the user's language
* Definition: Whether the user's language matches natural, realistic human expression habits (tone, logic, style), and whether the response logic matches how a real human would naturally react in the situation.
* Scoring rubric:
  * 5: Very natural and fluent; tone, logic, and style are highly consistent with human speech, and the response logic matches a real person's natural reaction in this context.
  * 4: Generally natural and clear; only occasional word choice or minor logical details feel slightly stiff, but overall naturalness is not affected.
  * 3: Basically natural and understandable, but there is noticeable stiffness or some logical jumps; still broadly close to human expression.
  * 2: Clearly unnatural; language shows many stiff or mechanical traces, with multiple unreasonable points in logic, making it easy to feel "this wasn't said by a human."
  * 1: Extremely unnatural or chaotic; lacks human expression characteristics, logic is incoherent, and it severely violates how a real human would naturally respond.

[Simulated user dialogue information]
[User intent]: {intent}
[User profile]: {profile}
[Dialogue scenario]: {dialogue_scene}
[Simulated dialogue content]:
{dialogue}

[Requirements]
- Evaluate only the quality of the user's utterances in the current scenario; do not consider the assistant's utterances.
- Output in the following JSON format between ```json and ```:
```json
{{
  "intent alignment": {{
    "score": X
  }},
  "persona consistency": {{
    "score": X
  }},
  "context relevance": {{
    "score": X
  }},
  "naturalness": {{
    "score": X
  }}
}}
Where "intent alignment" corresponds to Dimension 1, "persona consistency" to Dimension 2, "context relevance" to Dimension 3, and "naturalness" to Dimension 4. X must be an integer from 1 to 5.
You may output your reasoning process first, and then provide the JSON response.)TPL";

    // --- assistant-side probes -------------------------------------------------

    t["intent_prediction"] = R"TPL(Before replying, state your best guess of what the user currently wants from this conversation.
### Conversation So Far
{conversation}
### Requirements
Output in the following JSON format, enclosed between ```json and ```:
```json
{{
  "intent": "xxx"
}}
```
Keep the intent to one sentence; describe the user's current goal, not your planned reply.)TPL";

    t["preference_prediction"] = R"TPL(Based on the conversation, predict the user's level on each preference dimension below.
### Preference Dimensions
{dimensions}
### Conversation
{conversation}
### Requirements
- Assign each dimension exactly one value: "low" or "high".
- Output in the following JSON format, enclosed between ```json and ```:
```json
{{
  "dimension name": "low/high",
  ...
}}
```
Include every listed dimension; do not add dimensions of your own.)TPL";

    t["profile_memory"] = R"TPL(Summarize or refine what is known about this user's preferences after the conversation below.
### Prior Preference Summary
{prior_summary}
### Conversation
{conversation}
### Requirements
- Carry forward prior facts that still hold; revise the ones this conversation contradicts.
- Keep the summary short and structured (one line per preference).
- Output in the following JSON format, enclosed between ```json and ```:
```json
{{
  "summary": "xxx"
}}
```)TPL";

    t["rigid_reasoning"] = R"TPL(You are an evaluator auditing a single assistant reply within a dialogue for rigid reasoning: repeating or lightly rephrasing earlier suggestions without adapting to constraints or feedback the user has introduced since.
### Conversation So Far
{conversation}
### Assistant Reply Under Audit
{response}
### Requirements
- Label the reply "rigid" only if it re-offers prior suggestions while ignoring newly stated user constraints or negative feedback.
- Output in the following JSON format, enclosed between ```json and ```:
```json
{{
  "rigid": "true/false"
}}
```
You may output your reasoning process first, and then provide the JSON response.)TPL";

    t["intention_quality"] = R"TPL(You are auditing whether a generated user intention is reasonable: realistic, consistent with the triggering event, and something a person would plausibly ask an AI assistant.
### Triggering Event
{event}
### Generated Intention
{intent}
### Requirements
Output in the following JSON format, enclosed between ```json and ```:
```json
{{
  "reasonable": "true/false"
}}
```
You may output your reasoning process first, and then provide the JSON response.)TPL";
}

}  // namespace lifesim
