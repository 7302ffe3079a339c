#include <stdio.h>
#include <string.h>

#include "gridsieve.h"

#define CHECK(cond)                                              \
    do {                                                         \
        if (!(cond)) {                                           \
            fprintf(stderr, "%s:%d: %s\n", __FILE__, __LINE__, #cond); \
            return 1;                                            \
        }                                                        \
    } while (0)

int main(void) {
    GsAlphabet *alphabet = NULL;
    CHECK(gs_alphabet_parse("A\t65\nB\t66\nC\t67\nD\t68\nE\t69\n", &alphabet) == GS_STATUS_OK);
    CHECK(gs_alphabet_len(alphabet) == 5);

    uint8_t grid[85];
    size_t len = 0;
    char text[86];
    for (int i = 0; i < 85; i++) {
        text[i] = (char)('A' + (i * 7 + i / 5) % 5);
    }
    text[85] = '\0';
    CHECK(gs_alphabet_encode(alphabet, text, grid, sizeof grid, &len) == GS_STATUS_OK);
    CHECK(len == 85);
    CHECK(gs_alphabet_encode(alphabet, text, grid, 10, &len) == GS_STATUS_BUFFER_TOO_SMALL);

    GsKeySpace *space = NULL;
    CHECK(gs_keyspace_new(5, 17, &space) == GS_STATUS_OK);
    CHECK(gs_keyspace_size(space) == 122880);
    uint8_t permuted[85], back[85];
    CHECK(gs_keyspace_apply(space, 98765, grid, permuted, 85) == GS_STATUS_OK);
    CHECK(gs_keyspace_invert(space, 98765, permuted, back, 85) == GS_STATUS_OK);
    CHECK(memcmp(grid, back, 85) == 0);
    CHECK(gs_keyspace_apply(space, 122880, grid, permuted, 85) == GS_STATUS_VALIDATION);

    char message[128];
    size_t n = gs_last_error_message(message, sizeof message);
    CHECK(n > 0 && strstr(message, "ordinal") != NULL);

    uint64_t id = 0;
    CHECK(gs_sequence_id(alphabet, grid, 2, GS_ID_FORMULA_SUM_OF_SQUARES, &id) == GS_STATUS_OK);
    CHECK(id == (uint64_t)(text[0] * text[0] + text[1] * text[1]));

    uint32_t state = 1, value = 0;
    for (int i = 0; i < 10000; i++) {
        CHECK(gs_prng_next(&state, &value) == GS_STATUS_OK);
    }
    CHECK(value == 1043618065u);
    state = 0;
    CHECK(gs_prng_next(&state, &value) != GS_STATUS_OK);

    gs_keyspace_free(space);
    gs_alphabet_free(alphabet);
    puts("ok");
    return 0;
}
